#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace damsim {

struct UnitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parses an SI-suffixed quantity like "4pF", "1750nH", "27MOhm", "28.38MHz",
// "0.5rad" or a bare number. The unit name, when present, must match
// `expected_unit` ("F", "H", "Ohm", "Hz", "V", "A", "s", "rad"). Bare numbers
// are accepted for any unit.
double parse_quantity(std::string_view text, std::string_view expected_unit);

// Formats a double with full round-trip precision (used by all CSV writers so
// outputs are byte-stable across runs).
std::string format_full(double v);

}  // namespace damsim
