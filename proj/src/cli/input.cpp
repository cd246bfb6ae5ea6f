#include "cli/input.hpp"

#include "poolcore/simulation.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace poolcore::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool try_parse(const std::string& text, double& value) {
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(trim(part));
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

}  // namespace

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    if (!try_parse(trim(text), v)) throw InputError("invalid " + what + ": '" + text + "'");
    return v;
}

std::vector<double> parse_pvalues(std::istream& in, const std::string& source) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        for (const auto& field : split(line, ',')) {
            const std::string where = source + ":" + std::to_string(line_no);
            double v = 0.0;
            if (field.empty()) throw InputError(where + ": empty field");
            if (!try_parse(field, v)) throw InputError(where + ": not a number: '" + field + "'");
            if (!(v >= 0.0 && v <= 1.0)) throw InputError(where + ": p-value outside [0,1]: " + field);
            values.push_back(v);
        }
    }
    if (values.empty()) throw InputError(source + ": no p-values found");
    return values;
}

std::vector<double> read_pvalues(const std::string& path) {
    if (path == "-") return parse_pvalues(std::cin, "<stdin>");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file '" + path + "'");
    return parse_pvalues(in, path);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) throw InputError(what + ": expected lo:hi:n, got '" + text + "'");
        const double lo = parse_double(parts[0], what);
        const double hi = parse_double(parts[1], what);
        const double n = parse_double(parts[2], what);
        if (!(n >= 1.0) || n != static_cast<double>(static_cast<long long>(n))) {
            throw InputError(what + ": point count must be a positive integer");
        }
        return linspace(lo, hi, static_cast<std::size_t>(n));
    }
    std::vector<double> out;
    for (const auto& part : split(t, ',')) out.push_back(parse_double(part, what));
    if (out.empty()) throw InputError(what + ": empty list");
    return out;
}

}  // namespace poolcore::cli
