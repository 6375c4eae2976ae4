#pragma once

#include <string>

#include "deconfound/model/variant.hpp"

namespace dcfd::model {

// Compact JSON form of a variant spec, stable across writes of the same
// spec. Used by run ledgers so checkpoints can be reloaded without the
// original experiment config.
std::string variant_to_json(const VariantSpec& spec);

// Parses and validates; malformed documents raise data errors.
VariantSpec variant_from_json(const std::string& text);

}  // namespace dcfd::model
