#pragma once

#include <string>
#include <string_view>

#include "quadinv/coeffs.hpp"

namespace quadinv {

// Parses an inline coefficient expression of time.
//
// Grammar (whitespace ignored):
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*
//   unary   := '-' unary | primary
//   primary := number | 't' | 'const(' number ')' | 'poly(' number (',' number)* ')'
//            | ('exp' | 'cos' | 'sin') '(' rate ')' | '(' expr ')'
//   rate    := ['-'] [number ['*']] 't'
//
// poly(c0, c1, ...) is c0 + c1 t + ... . Derivatives follow by rule.
// Throws UsageError with the offending column on malformed input.
TimeFunction parse_time_function(std::string_view text);

CoefficientSet make_inline_coefficients(const std::string& a, const std::string& b,
                                        const std::string& c, const std::string& d,
                                        double t_max = default_t_max);

} // namespace quadinv
