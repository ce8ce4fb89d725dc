#include "veriflow/tools.h"

#include "veriflow/error.h"

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>

namespace veriflow {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

constexpr int kFractionDigits = 20;

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  cpp_rational parse() {
    skip_ws();
    if (pos_ >= src_.size()) {
      throw EvalError("empty expression", pos_);
    }
    auto value = expression();
    skip_ws();
    if (pos_ < src_.size()) {
      throw EvalError("unexpected character '" + std::string(1, src_[pos_]) + "'",
                      pos_);
    }
    return value;
  }

private:
  enum class Op { none, add, sub, mul, div };

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool match(std::string_view token) {
    if (src_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  Op additive() {
    skip_ws();
    if (match("+")) {
      return Op::add;
    }
    if (match("-") || match("−")) {
      return Op::sub;
    }
    return Op::none;
  }

  Op multiplicative() {
    skip_ws();
    if (match("*") || match("×")) {
      return Op::mul;
    }
    if (match("/") || match("÷")) {
      return Op::div;
    }
    return Op::none;
  }

  cpp_rational expression() {
    auto value = term();
    for (;;) {
      const auto op = additive();
      if (op == Op::none) {
        return value;
      }
      auto rhs = term();
      value = op == Op::add ? cpp_rational(value + rhs) : cpp_rational(value - rhs);
    }
  }

  cpp_rational term() {
    auto value = unary();
    for (;;) {
      const auto save = pos_;
      const auto op = multiplicative();
      if (op == Op::none) {
        return value;
      }
      auto rhs = unary();
      if (op == Op::mul) {
        value *= rhs;
      } else {
        if (rhs == 0) {
          throw EvalError("division by zero", save);
        }
        value /= rhs;
      }
    }
  }

  cpp_rational unary() {
    const auto op = additive();
    if (op == Op::sub) {
      return -unary();
    }
    if (op == Op::add) {
      return unary();
    }
    return primary();
  }

  cpp_rational primary() {
    skip_ws();
    if (pos_ >= src_.size()) {
      throw EvalError("unexpected end of expression", pos_);
    }
    if (src_[pos_] == '(') {
      const auto open = pos_++;
      auto value = expression();
      skip_ws();
      if (pos_ >= src_.size() || src_[pos_] != ')') {
        throw EvalError("unbalanced parenthesis", open);
      }
      ++pos_;
      return value;
    }
    return number();
  }

  cpp_rational number() {
    const auto start = pos_;
    cpp_int digits = 0;
    cpp_int scale = 1;
    bool any = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      digits = digits * 10 + (src_[pos_++] - '0');
      any = true;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits = digits * 10 + (src_[pos_++] - '0');
        scale *= 10;
        any = true;
      }
    }
    if (!any) {
      throw EvalError(pos_ < src_.size()
                          ? "unexpected character '" + std::string(1, src_[pos_]) + "'"
                          : std::string("expected a number"),
                      start);
    }
    return cpp_rational(digits, scale);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string format_fixed(const cpp_int &scaled, int fraction_digits) {
  std::string digits = scaled.str();
  if (fraction_digits == 0) {
    return digits;
  }
  if (digits.size() <= static_cast<std::size_t>(fraction_digits)) {
    digits.insert(0, static_cast<std::size_t>(fraction_digits) - digits.size() + 1, '0');
  }
  std::string out = digits.substr(0, digits.size() - fraction_digits) + "." +
                    digits.substr(digits.size() - fraction_digits);
  while (out.back() == '0') {
    out.pop_back();
  }
  if (out.back() == '.') {
    out.pop_back();
  }
  return out;
}

std::string format_rational(const cpp_rational &value) {
  cpp_int num = boost::multiprecision::numerator(value);
  const cpp_int den = boost::multiprecision::denominator(value);
  const bool negative = num < 0;
  if (negative) {
    num = -num;
  }

  // Terminating iff the reduced denominator has no prime factors but 2 and 5.
  cpp_int rest = den;
  int twos = 0;
  int fives = 0;
  while (rest % 2 == 0) {
    rest /= 2;
    ++twos;
  }
  while (rest % 5 == 0) {
    rest /= 5;
    ++fives;
  }

  std::string text;
  if (rest == 1) {
    const int places = std::max(twos, fives);
    cpp_int scale = 1;
    for (int i = 0; i < places; ++i) {
      scale *= 10;
    }
    text = format_fixed(num * scale / den, places);
  } else {
    cpp_int scale = 1;
    for (int i = 0; i < kFractionDigits; ++i) {
      scale *= 10;
    }
    const cpp_int scaled = num * scale;
    cpp_int q = scaled / den;
    const cpp_int r = scaled % den;
    const cpp_int twice = r * 2;
    if (twice > den || (twice == den && q % 2 == 1)) {
      ++q;
    }
    text = format_fixed(q, kFractionDigits);
  }
  if (negative && text != "0") {
    text.insert(0, "-");
  }
  return text;
}

} // namespace

std::string calculator_eval(std::string_view expr) {
  return format_rational(Parser(expr).parse());
}

} // namespace veriflow
