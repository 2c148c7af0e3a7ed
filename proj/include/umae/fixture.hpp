#pragma once

#include <filesystem>

namespace umae {

// Writes the bundled synthetic corpus: three datasets (60 instances each) in
// a tiny color/object vocabulary, sample images, a toy embedding table,
// externally-computed score files, and a ready-to-run pipeline config.
//
// The corpus is built so the closed loop is non-trivial:
// - every object noun has a fixed color, so an n-gram scorer trained on the
//   examples ranks the correct option lowest-perplexity;
// - gold answer sets mix surface variants ("red", "Red", "red!") with one
//   rare distractor, so Best/Average/Worst human bounds order strictly;
// - explanations echo the answer first, keeping joint generation learnable.
void write_fixture(const std::filesystem::path& out_dir);

} // namespace umae
