#pragma once

#include "shine/scenario/spec.hpp"
#include "shine/sim/snapshot.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shine::explain {

/// Replaces every placeholder with the current value. Booleans read from a
/// toggle-style property render as on/off, other booleans as true/false;
/// numbers use format_number. Unresolvable placeholders are left verbatim
/// (validation rules them out for accepted scenarios).
std::string render_template(const ExplanationSpec& spec, const sim::StateSnapshot& state,
                            const ScenarioSpec& scenario);

/// Lowercase ASCII words; every other byte separates.
std::vector<std::string> tokenize(std::string_view text);

/// Index of the follow-up whose keyword set shares the most words with
/// `query` (at least one); ties go to the earliest. Follow-ups pointing at a
/// spec in `exclude` are skipped.
std::optional<std::size_t> match_follow_up(const ExplanationSpec& parent, std::string_view query,
                                           const std::vector<std::string>& exclude = {});

}  // namespace shine::explain
