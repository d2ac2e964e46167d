#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "trajshap/scene.hpp"

namespace trajshap {

// Parses ETH-UCY style text: one observation per line, "frame<TAB>agent_id<TAB>x<TAB>y".
// Fields may also be blank-separated; frame/agent_id accept integral floats
// ("780.0"). Frames are rebased onto a uniform grid (gcd of frame offsets);
// unobserved grid frames are marked absent. Tracks are ordered by first
// appearance (ties by agent_id) and padded with dummy tracks up to n_max.
// Kinematics are left zeroed; call derive_kinematics on the result.
Scene parse_scene_text(std::istream& input, double dt, int n_max);

// Canonical text form: frames rebased to 0..len-1, positions with 6 fractional
// digits, LF endings, rows sorted by (frame, track order). Only real tracks'
// present frames are emitted. serialize(parse(serialize(s))) == serialize(s).
std::string serialize_scene_text(const Scene& scene);

// Dataset manifest: JSON {"dt": .., "n_max": .., "scenes": [relative paths]}.
Dataset load_dataset(const std::filesystem::path& manifest_path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

}  // namespace trajshap
