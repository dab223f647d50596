#pragma once

// One invocation of every CLI subcommand, chained so later commands read files written by
// earlier ones. Every path lives under `root`.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace ssp::testing {

inline void write_tiny_config(const std::filesystem::path& path) {
    std::ofstream(path) << "epochs = 2\nlr = 0.1\ntrain_scenes = 2\neval_scenes = 1\n";
}

inline std::vector<std::vector<std::string>> cli_commands(const std::filesystem::path& root) {
    const auto p = [&](const std::string& rel) { return (root / rel).string(); };
    return {
        {"gen-scene", "--out-dir", p("scene"), "--seed", "3"},
        {"gen-scene", "--out-dir", p("scene_eval"), "--eval", "--config", p("tiny.cfg"), "--seed", "4"},
        {"flow-align", "--frames", p("scene/frame_000.ppm"), p("scene/frame_001.ppm"), p("scene/frame_002.ppm"),
         p("scene/frame_003.ppm"), "--out-dir", p("flow"), "--masks"},
        {"binarize", "--in", p("flow/flow_001.pgm"), "--out", p("bin.pgm"), "--tau", "0.1"},
        {"premask", "--flow-mask", p("scene/flowmask_001.pgm"), "--gt", p("scene/gt_001.pgm"), "--out", p("pre.pgm")},
        {"premask", "--flow-mask", p("scene/flowmask_001.pgm"), "--inference", "--out", p("pre_inf.pgm")},
        {"postmask", "--flow-mask", p("scene/flowmask_001.pgm"), "--gt", p("scene/gt_001.pgm"), "--out", p("post.pgm")},
        {"apply", "--frame", p("scene/frame_001.ppm"), "--mask", p("pre.pgm"), "--out", p("applied.ppm")},
        {"loss", "--pred", p("flow/flow_001.pgm"), "--target", p("scene/gt_001.pgm"), "--post-label", p("post.pgm"),
         "--class-logits", "0.5,-1,2,0", "--class-labels", "1,0,0,1", "--classes", "2", "--out", p("loss.jsonl")},
        {"metrics", "--manifest", p("scene/manifest.jsonl"), "--out", p("metrics.jsonl")},
        {"metrics", "--manifest", p("scene/manifest.jsonl"), "--macro", "--beta2", "1"},
        {"train", "--config", p("tiny.cfg"), "--out", p("train.jsonl"), "--seed", "5"},
        {"ablate", "--config", p("tiny.cfg"), "--seeds", "2", "--variants", "premask,full", "--workers", "2", "--out",
         p("ablate.jsonl")},
        {"vta-demo", "--prompt1", "a dog moving, a piano standing still.", "--prompt2", "dog.", "--image",
         p("scene/frame_000.ppm"), "--seed", "2"},
    };
}

/// Contents of every regular file under `root`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[std::filesystem::relative(e.path(), root).string()] = ss.str();
    }
    return out;
}

}  // namespace ssp::testing
