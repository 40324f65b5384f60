#include "synthscan/toycorpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "synthscan/errors.hpp"
#include "synthscan/image.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

namespace {

// Bank words and the canonical markers occupy disjoint slots of the toy text
// encoder's 16-bin hash, so marker presence stays linearly separable in the
// hybrid feature space (the unit tests pin this with a perceptron oracle).
const char* kAdjectives[] = {"red", "green", "small", "bright", "old", "tall", "blue", "dark"};
const char* kNouns[] = {"dog", "cat", "bus", "zebra", "bench", "pizza", "kite", "horse"};
const char* kVerbs[] = {"sitting", "standing", "running", "parked",
                        "resting", "playing",  "grazing", "leaning"};
const char* kPreps[] = {"on", "near", "under", "behind", "past", "against"};
const char* kPlaces[] = {"field", "table", "park", "water", "market", "meadow", "station", "porch"};

template <std::size_t N>
const char* pick(const char* (&bank)[N], Rng& rng) {
    return bank[rng.below(N)];
}

std::string default_marker(const Origin& origin) {
    switch (origin.kind) {
        case OriginKind::sd: return "sdmark";
        case OriginKind::ld: return "ldmark";
        case OriginKind::glide: return "glidetag";
        case OriginKind::dalle2: return "dalle2mark";
        default: break;
    }
    std::string s = origin.str();
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s + "mark";  // other origins: no slot guarantee
}

// Base texture shared by every origin; the per-origin overlay is what the
// detectors and the spectra pick up.
Image synth_image(const Origin& origin, int resolution, bool patterns, Rng& rng) {
    Image img = Image::create(resolution, resolution, 3);
    int base[3] = {static_cast<int>(70 + rng.below(101)), static_cast<int>(70 + rng.below(101)),
                   static_cast<int>(70 + rng.below(101))};
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            for (int c = 0; c < 3; ++c) {
                int v = base[c] + static_cast<int>(rng.below(49)) - 24;
                int bump = 0;
                if (patterns) switch (origin.kind) {
                    case OriginKind::sd: bump = (c == 0 && x % 4 < 2) ? 48 : 0; break;
                    case OriginKind::ld: bump = (c == 1 && y % 4 < 2) ? 48 : 0; break;
                    case OriginKind::glide:
                        bump = (c == 2 && ((x / 4 + y / 4) % 2 == 0)) ? 48 : 0;
                        break;
                    case OriginKind::dalle2: bump = (c != 1 && (x + y) % 6 < 3) ? 40 : 0; break;
                    case OriginKind::other:
                        bump = ((x - resolution / 2) * (x - resolution / 2) +
                                    (y - resolution / 2) * (y - resolution / 2) <
                                resolution * resolution / 9)
                                   ? 30
                                   : 0;
                        break;
                    case OriginKind::real: break;
                }
                img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v + bump, 0, 255));
            }
        }
    }
    return img;
}

}  // namespace

std::filesystem::path generate_toy_corpus(const ToyCorpusOptions& options) {
    if (options.n_per_origin == 0) raise_usage("BadConfig", "n_per_origin must be positive");
    if (options.resolution < 4) raise_usage("BadConfig", "resolution must be >= 4");
    bool has_real = false;
    for (const auto& o : options.origins) has_real |= o.kind == OriginKind::real;
    if (!has_real) raise_usage("BadConfig", "corpus needs the real origin");

    std::filesystem::create_directories(options.dir / "images");
    std::filesystem::path manifest_path = options.dir / "manifest.jsonl";
    std::ofstream out(manifest_path);
    if (!out) raise_data("UnwritablePath", "cannot write " + manifest_path.string());

    // Shared base prompts: fake record i of every origin reuses prompt i of
    // the reals, mirroring how fakes are generated from real captions.
    std::vector<std::string> prompts, topic_a, topic_b;
    Rng prompt_rng(mix_seed(options.seed, 0x70726f6dULL));
    for (std::size_t i = 0; i < options.n_per_origin; ++i) {
        const char* noun = pick(kNouns, prompt_rng);
        const char* place = pick(kPlaces, prompt_rng);
        std::string prompt = std::string("a ") + pick(kAdjectives, prompt_rng) + " " + noun + " " +
                             pick(kVerbs, prompt_rng) + " " + pick(kPreps, prompt_rng) + " the " +
                             place;
        prompts.push_back(std::move(prompt));
        topic_a.push_back(noun);
        topic_b.push_back(place);
    }

    char idbuf[64];
    for (const Origin& origin : options.origins) {
        std::string marker;
        auto it = options.marker_overrides.find(origin.str());
        if (it != options.marker_overrides.end())
            marker = it->second;
        else if (origin.kind != OriginKind::real)
            marker = default_marker(origin);

        Rng rng(mix_seed(options.seed, fnv1a64(origin.str())));
        for (std::size_t i = 0; i < options.n_per_origin; ++i) {
            std::snprintf(idbuf, sizeof(idbuf), "%s-%05zu", origin.str().c_str(), i);
            std::string id = idbuf;
            std::string filename = "images/" + id + ".ppm";
            save_image(synth_image(origin, options.resolution, options.image_patterns, rng),
                       options.dir / filename);

            std::string prompt = prompts[i];
            if (!marker.empty() && rng.next_double() < options.marker_prob)
                prompt += " " + marker;

            nlohmann::json line = {{"id", id},
                                   {"image_path", filename},
                                   {"prompt", prompt},
                                   {"origin", origin.str()},
                                   {"dataset_tag", options.dataset_tag}};
            if (options.with_topics)
                line["topics"] = std::vector<std::string>{topic_a[i], topic_b[i]};
            out << line.dump() << "\n";
        }
    }
    return manifest_path;
}

}  // namespace synthscan
