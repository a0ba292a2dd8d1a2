#include <redec/parse.hpp>

#include <cctype>

namespace redec {

namespace {

struct PolyParser {
  const std::string& s;
  const std::vector<std::string>& vars;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw EngineError(ErrorCode::SyntaxError,
                      "syntax error at position " + std::to_string(pos) + ": " + what +
                          " in \"" + s + "\"");
  }

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) { ++pos; return true; }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  Poly expr() {
    Poly acc = term();
    for (;;) {
      if (eat('+')) acc = acc + term();
      else if (eat('-')) acc = acc - term();
      else return acc;
    }
  }

  Poly term() {
    Poly acc = factor();
    for (;;) {
      skip_ws();
      if (eat('*')) { acc = acc * factor(); continue; }
      // implicit multiplication: e.g. "2x1", ")(", "x1 x2"
      char c = peek();
      if (c == '(' || std::isalpha(static_cast<unsigned char>(c))) {
        acc = acc * factor();
        continue;
      }
      return acc;
    }
  }

  Poly factor() {
    Poly base = atom();
    skip_ws();
    if (eat('^')) {
      skip_ws();
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (start == pos) fail("expected exponent");
      unsigned e = static_cast<unsigned>(std::stoul(s.substr(start, pos - start)));
      return base.pow(e);
    }
    return base;
  }

  Poly atom() {
    skip_ws();
    if (eat('(')) {
      Poly p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (eat('-')) return -atom();
    if (eat('+')) return atom();
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      std::string num = s.substr(start, pos - start);
      if (pos < s.size() && s[pos] == '/') {
        ++pos;
        size_t ds = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (ds == pos) fail("expected denominator");
        auto r = parse_rat(num + "/" + s.substr(ds, pos - ds));
        if (!r) fail("bad rational");
        return Poly::constant(vars.size(), *r);
      }
      auto r = parse_rat(num);
      if (!r) fail("bad integer");
      return Poly::constant(vars.size(), *r);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos;
      ++pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                                s[pos] == '_'))
        ++pos;
      std::string name = s.substr(start, pos - start);
      for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == name) {

          return Poly::var(vars.size(), i);
        }
      fail("unknown variable \"" + name + "\"");
    }
    fail("expected atom");
  }
};

}  // namespace

Poly parse_poly(const std::string& text, const std::vector<std::string>& vars) {
  PolyParser p{text, vars};
  Poly r = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return r;
}

Poly parse_poly_xn(const std::string& text, size_t n) {
  std::vector<std::string> vars;
  vars.reserve(n);
  for (size_t i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
  return parse_poly(text, vars);
}

}  // namespace redec
