#pragma once
// Recursive-descent parser for polynomial expressions over named variables
// (x1, x2, … or explicit name lists): rational constants, + - * ^ and
// parentheses.  Shared by the family manifest loader and the formula parser.

#include <redec/polynomial.hpp>

#include <string>
#include <vector>

namespace redec {

// Parses an expression into a polynomial over the given variable names.
// Throws EngineError(SyntaxError) with a position message on bad input.
Poly parse_poly(const std::string& text, const std::vector<std::string>& vars);

// Convenience: variables x1..xn.
Poly parse_poly_xn(const std::string& text, size_t n);

}  // namespace redec
