#pragma once

#include "poolcore/errors.hpp"

#include <istream>
#include <string>
#include <vector>

namespace poolcore::cli {

/// Malformed user input; the message carries the source and line number.
class InputError : public DomainError {
public:
    using DomainError::DomainError;
};

/// One value per line, or comma-separated values on a line. Text after '#'
/// is ignored, as are blank lines. Throws InputError naming `source:line`.
std::vector<double> parse_pvalues(std::istream& in, const std::string& source);

/// Reads `path` ("-" is stdin) through parse_pvalues.
std::vector<double> read_pvalues(const std::string& path);

/// "a,b,c" or "lo:hi:n" (n evenly spaced values, inclusive).
std::vector<double> parse_number_list(const std::string& text, const std::string& what);

/// Strict full-string double parse.
double parse_double(const std::string& text, const std::string& what);

}  // namespace poolcore::cli
