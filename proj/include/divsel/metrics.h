#pragma once

#include <span>
#include <string>
#include <string_view>

#include "divsel/corpus.h"

namespace divsel {

inline constexpr const char* kNotMentioned = "not_mentioned";
inline constexpr const char* kAgaConvention =
    "a slot is active iff its gold value differs from not_mentioned";

// Sorted "domain-slot=value" pairs joined by ';', keys and values normalized.
std::string canonical_state(const SlotMap& state);
// Inverse of canonical_state. Throws ConfigError on an entry without '='.
SlotMap parse_state(std::string_view canonical);

// Exact-match rate after normalize_label. Throws ConfigError on a length
// mismatch or empty input.
double jga(std::span<const std::string> predictions, std::span<const std::string> golds);

// Mean over turns of correct active slots / active slots. Turns with no active
// gold slot are skipped; throws ConfigError if every turn is skipped.
double aga(std::span<const SlotMap> predicted, std::span<const SlotMap> gold);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for a single value.
double sample_std(std::span<const double> v);

}  // namespace divsel
