#include "featforge/featscript.hpp"

namespace featforge::featscript {

const char* const kGrammarVersion = "featscript-1";

std::string grammar_summary() {
    return R"DOC(FeatScript: a total expression language for per-patient scalar features.

Grammar (EBNF):
  program  = expr ;
  expr     = "let" ident "=" expr "in" expr
           | "if" expr "then" expr "else" expr
           | or ;
  or       = and { "or" and } ;
  and      = not { "and" not } ;
  not      = "not" not | cmp ;
  cmp      = add [ ("<" | "<=" | ">" | ">=" | "==" | "!=") add ] ;
  add      = mul { ("+" | "-") mul } ;
  mul      = uminus { ("*" | "/") uminus } ;
  uminus   = "-" uminus | primary ;
  primary  = number | ident | call | "(" expr ")" ;
  call     = ident "(" [ expr { "," expr } ] ")" ;
The first argument of a tool call is a variable name: a bare identifier or a
double-quoted string. '#' starts a line comment. No loops, no user-defined
functions, no strings elsewhere.

Builtins:
  tools: get_all_measurements(var), get_in_window(var, t0, t1),
         last_value_before(var, t), count_measurements(var),
         time_since_last(var, t)        -- the record is implicit
  aggregations (series -> scalar): mean, std, min, max, sum, count, first,
         last, quantile(series, q), slope
  projections (series -> series): times, values
  scalar: abs, log, exp, horizon()      -- horizon() is the record window length in hours
  NA forms: is_na(x) -> boolean, coalesce(x, fallback) -> scalar

Semantics:
  - A program must evaluate to a scalar or NA; a bare series or boolean
    result is invalid.
  - NA is absorbing: any operator or builtin given an NA argument yields NA.
    Only is_na, coalesce and an if-condition treat NA specially (an NA
    condition makes the whole if NA). Comparisons with NA yield NA.
  - 'if' evaluates only the taken branch; 'and'/'or' evaluate both operands.
  - Aggregations over an empty series yield NA, except count which yields 0.
    std uses the population convention (a single point has std 0). slope is
    the least-squares slope of value on time; NA with fewer than 2 points or
    zero time variance. quantile interpolates linearly between order
    statistics; q is clamped to [0, 1].
  - Runtime errors (the program yields no value for that patient): division
    by zero on non-NA operands, log of a non-positive value, an arithmetic
    result that is not finite, get_in_window with t_start > t_end, and
    evaluation budget exhaustion.
)DOC";
}

}  // namespace featforge::featscript
