// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stochctl/error.hpp"
#include "stochctl/manifold.hpp"
#include "stochctl/scalar_field.hpp"

namespace stochctl {

/// One term  coeff * trig(2 pi (k1 x + k2 y)) * d{x|y}.
struct TorusTerm {
  double coeff = 1.0;
  std::optional<ScalarField::TorusTrig> trig;
  int axis = 0;  // 0 = dx, 1 = dy
};

/// Parsed torus vector field: a sum of trig-coefficient terms times dx / dy.
///
/// Grammar (whitespace insignificant):
///   expr  := term (('+' | '-') term)*
///   term  := coeff ('*' trig)? '*' basis | trig '*' basis | basis
///   trig  := ('sin' | 'cos') '(' int ',' int ')'
///   basis := 'dx' | 'dy'
/// A missing coeff means 1, so "sin(1,0)*dy" and "dx" are accepted.
struct TorusExpr {
  std::vector<TorusTerm> terms;
  std::string source;

  Vec evaluate(const Vec& x) const {
    double out[2] = {0.0, 0.0};
    for (const auto& t : terms) {
      double c = t.coeff;
      if (t.trig) {
        c *= apply_trig(t.trig->trig, torus_phase(t.trig->k1, t.trig->k2, x[0], x[1]));
      }
      out[t.axis] += c;
    }
    return make_vec({out[0], out[1]});
  }
};

namespace detail {

class TorusExprParser {
 public:
  explicit TorusExprParser(std::string_view src) : src_(src) {}

  TorusExpr parse() {
    TorusExpr expr;
    expr.source = std::string(src_);
    skip_ws();
    expr.terms.push_back(term(1.0));
    for (;;) {
      skip_ws();
      if (at_end()) break;
      const char c = src_[pos_];
      if (c != '+' && c != '-') fail("'+', '-' or end of input");
      ++pos_;
      expr.terms.push_back(term(c == '-' ? -1.0 : 1.0));
    }
    return expr;
  }

 private:
  TorusTerm term(double sign) {
    TorusTerm t;
    skip_ws();
    if (starts_number()) {
      t.coeff = number();
      expect('*');
      skip_ws();
    }
    t.coeff *= sign;
    if (peek_word("sin") || peek_word("cos")) {
      t.trig = trig();
      expect('*');
      skip_ws();
    }
    if (peek_word("dx")) {
      pos_ += 2;
      t.axis = 0;
    } else if (peek_word("dy")) {
      pos_ += 2;
      t.axis = 1;
    } else {
      fail(t.trig ? "'dx' or 'dy'" : "coefficient, 'sin', 'cos', 'dx' or 'dy'");
    }
    return t;
  }

  ScalarField::TorusTrig trig() {
    ScalarField::TorusTrig tr{0, 0, src_[pos_] == 's' ? Trig::Sin : Trig::Cos};
    pos_ += 3;
    expect('(');
    tr.k1 = integer();
    expect(',');
    tr.k2 = integer();
    expect(')');
    return tr;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
    bool digits = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, digits = true;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, digits = true;
    }
    if (!digits) {
      pos_ = start;
      fail("decimal literal");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("decimal literal");
    }
    return value;
  }

  int integer() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
    const std::size_t digits_start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == digits_start) {
      pos_ = start;
      fail("integer");
    }
    int value = 0;
    const char* first = src_.data() + start;
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, src_.data() + pos_, value);
    if (ec != std::errc()) {
      pos_ = start;
      fail("integer");
    }
    return value;
  }

  bool starts_number() const {
    std::size_t p = pos_;
    if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
    return p < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[p])) || src_[p] == '.');
  }

  bool peek_word(std::string_view w) const { return src_.substr(pos_, w.size()) == w; }

  void expect(char c) {
    skip_ws();
    if (at_end() || src_[pos_] != c) fail(std::string("'") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool at_end() const { return pos_ >= src_.size(); }

  [[noreturn]] void fail(const std::string& expected) const { throw ParseError(pos_, expected, src_); }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline TorusExpr parse_torus_expr(std::string_view src) { return detail::TorusExprParser(src).parse(); }

}  // namespace stochctl
