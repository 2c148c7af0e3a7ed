#include "umae/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "umae/errors.hpp"

namespace umae {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(size_t, const Json&)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        Json row = Json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
        }
        fn(line_no, row);
    }
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::vector<Json> rows;
    for_each_jsonl(path, [&](size_t, const Json& row) { rows.push_back(row); });
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const Json& row : rows) {
        out << row.dump() << '\n';
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

} // namespace umae
