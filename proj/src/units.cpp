#include "damsim/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace damsim {

namespace {

const std::map<char, double>& prefix_table() {
    static const std::map<char, double> t = {
        {'f', 1e-15}, {'p', 1e-12}, {'n', 1e-9}, {'u', 1e-6},
        {'m', 1e-3},  {'k', 1e3},   {'M', 1e6},  {'G', 1e9},
    };
    return t;
}

}  // namespace

double parse_quantity(std::string_view text, std::string_view expected_unit) {
    size_t i = 0;
    while (i < text.size() && (std::isdigit((unsigned char)text[i]) || text[i] == '+' ||
                               text[i] == '-' || text[i] == '.' || text[i] == 'e' ||
                               text[i] == 'E' ||
                               ((text[i] == '+' || text[i] == '-') && i > 0 &&
                                (text[i - 1] == 'e' || text[i - 1] == 'E')))) {
        // stop at 'e'/'E' only if it is not followed by digit/sign (unit letter)
        if ((text[i] == 'e' || text[i] == 'E') &&
            !(i + 1 < text.size() &&
              (std::isdigit((unsigned char)text[i + 1]) || text[i + 1] == '+' ||
               text[i + 1] == '-'))) {
            break;
        }
        ++i;
    }
    if (i == 0) throw UnitError("quantity has no numeric part: '" + std::string(text) + "'");
    double mag = 0.0;
    auto res = std::from_chars(text.data(), text.data() + i, mag);
    if (res.ec != std::errc{} || res.ptr != text.data() + i)
        throw UnitError("bad number in quantity: '" + std::string(text) + "'");

    std::string_view rest = text.substr(i);
    if (rest.empty()) return mag;

    double scale = 1.0;
    std::string_view unit = rest;
    if (unit != expected_unit) {
        auto it = prefix_table().find(rest.front());
        if (it != prefix_table().end() && rest.substr(1) == expected_unit) {
            scale = it->second;
            unit = rest.substr(1);
        }
    }
    if (unit != expected_unit)
        throw UnitError("expected unit '" + std::string(expected_unit) + "' in '" +
                        std::string(text) + "'");
    return mag * scale;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace damsim
