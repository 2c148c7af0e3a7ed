#include "umae/fixture.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "umae/corpus.hpp"
#include "umae/errors.hpp"
#include "umae/image.hpp"
#include "umae/rng.hpp"

namespace umae {

namespace {

constexpr std::array<const char*, 8> kNouns{"ball", "box", "car", "cat", "dog", "cup", "hat", "key"};
constexpr std::array<const char*, 4> kColors{"red", "green", "blue", "yellow"};
constexpr std::array<const char*, 4> kMaterials{"wooden", "metal", "plastic", "paper"};
constexpr size_t kPerDataset = 60;

std::string capitalize(std::string word) {
    if (!word.empty()) {
        word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    }
    return word;
}

// Deterministic pseudo-score in [0,1) keyed by instance id.
double id_fraction(const std::string& id, const std::string& salt) {
    return static_cast<double>(splitmix64(fnv1a64(id + ":" + salt)) >> 11) * 0x1.0p-53;
}

// Ten gold answers mixing surface variants of the true color with one rare
// distractor. Two layouts: in layout A the unique least-frequent raw string
// is the distractor (Worst bound scores 0 there), in layout B it is a
// variant of the true answer (Worst scores high), giving a corpus where
// Best > mean Average > Worst strictly.
std::vector<std::string> gold_cluster(const std::string& color, const std::string& distractor, bool layout_b) {
    const std::string cap = capitalize(color);
    const std::string excl = color + "!";
    if (layout_b) {
        return {color, color, color, color, cap, cap, cap, distractor, distractor, excl};
    }
    return {color, color, color, color, cap, cap, cap, excl, excl, distractor};
}

std::vector<std::string> explanations_for(const std::string& noun, const std::string& color) {
    return {"it is " + color, "it is really " + color, "the " + noun + " is " + color};
}

VqaInstance base_instance(Dataset dataset, const std::string& id, size_t i) {
    const size_t noun_idx = i % kNouns.size();
    const size_t color_idx = noun_idx % kColors.size();
    const std::string noun = kNouns[noun_idx];
    const std::string color = kColors[color_idx];
    const std::string distractor = kColors[(color_idx + 1) % kColors.size()];

    VqaInstance inst;
    inst.id = id;
    inst.dataset = dataset;
    inst.image_ref = "images/scene_" + std::to_string(i % 3) + ".ppm";
    inst.direct_answers = gold_cluster(color, distractor, i % 4 == 3);
    return inst;
}

std::vector<VqaInstance> make_okvqa() {
    std::vector<VqaInstance> out;
    for (size_t i = 0; i < kPerDataset; ++i) {
        VqaInstance inst = base_instance(Dataset::kOkvqa, "okvqa_" + std::to_string(1000 + i), i);
        inst.question = "what color is the " + std::string(kNouns[i % kNouns.size()]) + " ?";
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<VqaInstance> make_aokvqa() {
    std::vector<VqaInstance> out;
    for (size_t i = 0; i < kPerDataset; ++i) {
        VqaInstance inst = base_instance(Dataset::kAokvqa, "aokvqa_" + std::to_string(1000 + i), i);
        const std::string noun = kNouns[i % kNouns.size()];
        const std::string color = kColors[(i % kNouns.size()) % kColors.size()];
        inst.question = "what color do you see on the " + noun + " ?";
        inst.mc_options.assign(kColors.begin(), kColors.end());
        inst.mc_correct_index = static_cast<int>((i % kNouns.size()) % kColors.size());
        inst.explanations = explanations_for(noun, color);
        inst.objects.push_back({noun, {kMaterials[i % kMaterials.size()]}});
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<VqaInstance> make_vcr() {
    std::vector<VqaInstance> out;
    for (size_t i = 0; i < kPerDataset; ++i) {
        VqaInstance inst = base_instance(Dataset::kVcr, "vcr_" + std::to_string(1000 + i), i);
        const std::string noun = kNouns[i % kNouns.size()];
        const std::string color = kColors[(i % kNouns.size()) % kColors.size()];
        inst.question = "near person1 what color is the " + noun + " ?";
        inst.mc_options.assign(kColors.begin(), kColors.end());
        inst.mc_correct_index = static_cast<int>((i % kNouns.size()) % kColors.size());
        inst.explanations = explanations_for(noun, color);
        inst.objects.push_back({"person", {"tall"}});
        inst.objects.push_back({noun, {kMaterials[i % kMaterials.size()]}});
        inst.regions.push_back({"person1", 2, 2, 14, 30, 0});
        inst.regions.push_back({"object1", 20, 4, 44, 28, 1});
        out.push_back(std::move(inst));
    }
    return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<std::vector<VqaInstance>>& datasets,
                  const std::string& salt, double lo, double span) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "id,value\n";
    for (const auto& instances : datasets) {
        for (const VqaInstance& inst : instances) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", lo + span * id_fraction(inst.id, salt));
            out << inst.id << ',' << buf << '\n';
        }
    }
}

void write_embeddings(const std::filesystem::path& path) {
    std::vector<std::string> words;
    words.insert(words.end(), kNouns.begin(), kNouns.end());
    words.insert(words.end(), kColors.begin(), kColors.end());
    words.insert(words.end(), kMaterials.begin(), kMaterials.end());
    for (const char* w : {"what", "color", "is", "the", "do", "you", "see", "on", "near", "person1",
                          "it", "really", "person", "tall"}) {
        words.emplace_back(w);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    constexpr size_t kDim = 8;
    for (const std::string& word : words) {
        out << word;
        Pcg32 rng(fnv1a64(word));
        for (size_t d = 0; d < kDim; ++d) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", rng.next_double() * 2.0 - 1.0);
            out << ' ' << buf;
        }
        out << '\n';
    }
}

void write_scene(const std::filesystem::path& path, size_t variant) {
    Image img;
    img.width = 48;
    img.height = 32;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            uint8_t* px = img.at(x, y);
            px[0] = static_cast<uint8_t>((x * 5 + variant * 40) % 256);
            px[1] = static_cast<uint8_t>((y * 7 + variant * 90) % 256);
            px[2] = static_cast<uint8_t>((x * 3 + y * 2) % 256);
        }
    }
    write_ppm(path, img);
}

void write_config(const std::filesystem::path& path) {
    const Json config{
        {"seed", 7},
        {"jobs", 1},
        {"train_fraction", 0.8},
        {"datasets", Json{{"OKVQA", "okvqa.jsonl"}, {"AOKVQA", "aokvqa.jsonl"}, {"VCR", "vcr.jsonl"}}},
        {"eval_dataset", "AOKVQA"},
        {"tasks", Json{{"OKVQA", Json::array({"q2a"})},
                       {"AOKVQA", Json::array({"q2a", "qa2e", "q2ae"})},
                       {"VCR", Json::array({"q2a", "qa2e", "q2ae"})}}},
        {"ngram", Json{{"order", 5}, {"k", 0.1}}},
        {"decode",
         Json{{"strategy", "beam"}, {"beam_size", 5}, {"max_len", 16}, {"length_normalize", true}}},
        {"selection", "both"},
        {"embeddings", "embeddings.txt"},
        {"gate", Json{{"mode", "mc"}, {"da_threshold", 0.0}}},
        {"external_scores", Json{{"SPICE", "spice.csv"}, {"BERTScore", "bertscore.csv"}}},
        {"strip_articles", false},
        {"model_name", "umae_ref"},
        {"out_dir", "out"},
    };
    write_file(path, config.dump(2) + "\n");
}

} // namespace

void write_fixture(const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "images");
    const std::vector<std::vector<VqaInstance>> datasets{make_okvqa(), make_aokvqa(), make_vcr()};
    save_dataset(out_dir / "okvqa.jsonl", datasets[0]);
    save_dataset(out_dir / "aokvqa.jsonl", datasets[1]);
    save_dataset(out_dir / "vcr.jsonl", datasets[2]);
    write_scores(out_dir / "spice.csv", datasets, "spice", 0.10, 0.50);
    write_scores(out_dir / "bertscore.csv", datasets, "bert", 0.75, 0.20);
    write_embeddings(out_dir / "embeddings.txt");
    for (size_t variant = 0; variant < 3; ++variant) {
        write_scene(out_dir / "images" / ("scene_" + std::to_string(variant) + ".ppm"), variant);
    }
    write_config(out_dir / "pipeline.json");
}

} // namespace umae
