#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umae/jsonl.hpp"

namespace umae {

enum class Dataset { kOkvqa, kAokvqa, kVcr, kVqax, kSynth };

std::string_view dataset_name(Dataset d);
Dataset parse_dataset(std::string_view name);

// Box around one named entity; pixel coordinates, right/bottom exclusive.
struct EntityRegion {
    std::string entity_id; // e.g. "Person1"
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
    int color_index = 0;
};

struct ObjectTag {
    std::string label;
    std::vector<std::string> attributes;
};

// One canonical question record, shared by every pipeline stage.
struct VqaInstance {
    std::string id;
    Dataset dataset = Dataset::kSynth;
    std::string image_ref;
    std::string question;
    std::vector<std::string> direct_answers; // 10 for OK-VQA / A-OKVQA, may be empty for VCR
    std::vector<std::string> mc_options;
    std::optional<int> mc_correct_index;
    std::vector<std::string> explanations; // 0-4
    std::vector<ObjectTag> objects;
    std::vector<EntityRegion> regions; // VCR only
};

struct SplitSpec {
    double train_fraction = 0.95;
    uint64_t seed = 0;
};

// Throws ValidationError (message carries the instance id) when an invariant
// is violated: mc index bounds, empty answers, OK-VQA with explanations,
// region geometry, entity/color consistency.
void validate(const VqaInstance& inst);

Json instance_to_json(const VqaInstance& inst);
VqaInstance instance_from_json(const Json& j);

// Loads canonical JSONL or a recognized upstream layout for the named dataset;
// validates every record and rejects duplicate ids.
std::vector<VqaInstance> load_dataset(const std::filesystem::path& path, Dataset dataset);

void save_dataset(const std::filesystem::path& path, std::span<const VqaInstance> instances);

// Deterministic partition: |train| = round(train_fraction * N); both sides
// keep the input order of the instances they receive.
std::pair<std::vector<VqaInstance>, std::vector<VqaInstance>>
split(std::span<const VqaInstance> instances, const SplitSpec& spec);

} // namespace umae
