#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "umae/corpus.hpp"

namespace umae::testing {

// Self-deleting scratch directory for tests that touch the filesystem.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "umae-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Minimal valid multiple-choice instance; tweak fields per test.
inline VqaInstance make_instance(const std::string& id, Dataset dataset = Dataset::kAokvqa) {
    VqaInstance inst;
    inst.id = id;
    inst.dataset = dataset;
    inst.question = "what color is the cat";
    inst.direct_answers = {"red", "red", "blue"};
    inst.mc_options = {"red", "blue", "green"};
    inst.mc_correct_index = 0;
    return inst;
}

} // namespace umae::testing
