#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "synthscan/dataset.hpp"

namespace synthscan {

// Synthetic prompt-image corpus for demos and tests: every origin stamps a
// characteristic pixel pattern, fake prompts reuse the matching real prompt
// plus an origin marker token, and records carry topic tags. Fully
// deterministic in (options, seed).
struct ToyCorpusOptions {
    std::filesystem::path dir;
    std::size_t n_per_origin = 50;
    std::uint64_t seed = 1;
    int resolution = 24;
    std::vector<Origin> origins = {Origin::real(), Origin::sd(), Origin::ld(), Origin::glide()};
    // origin name -> marker token appended to fake prompts; empty string
    // disables the marker for that origin. Defaults: "<lowercase origin>mark".
    std::map<std::string, std::string> marker_overrides;
    double marker_prob = 1.0;  // chance a fake prompt carries its marker
    bool image_patterns = true;  // stamp the per-origin pixel pattern
    std::string dataset_tag = "toy";
    bool with_topics = true;
};

// Writes dir/images/*.ppm plus dir/manifest.jsonl and returns the manifest path.
std::filesystem::path generate_toy_corpus(const ToyCorpusOptions& options);

}  // namespace synthscan
