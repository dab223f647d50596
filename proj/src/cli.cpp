#include "ssp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ssp/error.hpp"
#include "ssp/flow.hpp"
#include "ssp/grid.hpp"
#include "ssp/losses.hpp"
#include "ssp/metrics.hpp"
#include "ssp/netpbm.hpp"
#include "ssp/random.hpp"
#include "ssp/scene.hpp"
#include "ssp/train.hpp"
#include "ssp/vta.hpp"

namespace ssp::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using train::format_number;
using train::round6;

std::string frame_name(const std::string& stem, std::size_t t, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%03zu.", t);
    return stem + buf + ext;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw IoError("failed writing '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

std::string join_numbers(std::span<const double> v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += format_number(v[i]);
    }
    return s;
}

std::string join_flags(std::span<const std::uint8_t> v) {
    std::string s;
    for (auto b : v) s += b ? '1' : '0';
    return s;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used == 0 || used != item.size()) throw ValueError(std::string(what) + ": bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

struct Common {
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_seed(CLI::App* sub, Common& common) {
    sub->add_option("--seed", common.seed, "Seed for every random choice (default 0)");
}

train::TrainConfig config_from(const std::string& path, const Common& common, const CLI::App* sub) {
    train::TrainConfig cfg = path.empty() ? train::TrainConfig{} : train::load_config(path);
    if (sub->count("--seed") > 0 || path.empty()) cfg.seed = common.seed;
    return cfg;
}

// ---- subcommands ---------------------------------------------------------------------------

int cmd_flow_align(const std::vector<std::string>& frames, const std::vector<std::string>& flows,
                   const std::string& out_dir, double tau, bool masks, std::ostream& out) {
    std::optional<FlowSequence> raw;
    if (!frames.empty()) {
        std::vector<ImageFrame> imgs;
        for (const auto& f : frames) imgs.push_back(netpbm::read_image(f));
        raw = frame_diff_flow(imgs);
    } else {
        std::vector<FlowField> fields;
        for (const auto& f : flows) fields.push_back(gray_to_flow(netpbm::read_gray(f)));
        raw = FlowSequence(std::move(fields));
    }
    const FlowSequence aligned = temporal_align(*raw);
    const fs::path dir(out_dir);
    ensure_dir(dir);
    out << "inputs " << raw->size() << " aligned " << aligned.size() << '\n';
    for (std::size_t t = 0; t < aligned.size(); ++t) {
        const GrayFrame g = flow_to_gray(aligned[t]);
        const fs::path p = dir / frame_name("flow", t, "pgm");
        netpbm::write(p, g);
        double mean = 0.0;
        for (double v : g.data()) mean += v;
        mean /= static_cast<double>(g.size());
        out << "frame " << t << " mean " << format_number(mean);
        if (masks) {
            const BinaryMask m = binarize(g, tau);
            netpbm::write(dir / frame_name("mask", t, "pgm"), m);
            out << " mask_pixels " << m.count();
        }
        out << '\n';
    }
    return 0;
}

int cmd_binarize(const std::string& in, const std::string& out_path, double tau, std::ostream& out) {
    const BinaryMask m = binarize(netpbm::read_gray(in), tau);
    netpbm::write(out_path, m);
    out << "tau " << format_number(tau) << " foreground " << m.count() << " of " << m.size() << '\n';
    return 0;
}

void print_stats(std::ostream& out, const TriMask& m) {
    const MaskStats s = mask_stats(m);
    out << "ones " << s.count_one << " halves " << s.count_half << " zeros " << s.count_zero << '\n';
}

int cmd_premask(const std::string& flow_mask, const std::string& gt, bool inference, const std::string& out_path,
                std::ostream& out) {
    const BinaryMask m_o = netpbm::read_binary_mask(flow_mask);
    const TriMask m = inference ? inference_premask(m_o) : premask(m_o, netpbm::read_binary_mask(gt));
    netpbm::write(out_path, m);
    print_stats(out, m);
    return 0;
}

int cmd_postmask(const std::string& flow_mask, const std::string& gt, const std::string& out_path, std::ostream& out) {
    const BinaryMask m = postmask_label(netpbm::read_binary_mask(flow_mask), netpbm::read_binary_mask(gt));
    netpbm::write(out_path, m);
    out << "foreground " << m.count() << " of " << m.size() << '\n';
    return 0;
}

int cmd_apply(const std::string& frame, const std::string& mask, const std::string& out_path, std::ostream& out) {
    const ImageFrame f = apply_premask(netpbm::read_image(frame), netpbm::read_trimask(mask));
    netpbm::write(out_path, f);
    out << "applied " << f.height() << "x" << f.width() << "x" << f.channels() << '\n';
    return 0;
}

struct LossArgs {
    std::string pred, target, post_label, class_logits, class_labels, out;
    std::size_t classes = 0;
    LossWeights w;
};

int cmd_loss(const LossArgs& a, std::ostream& out) {
    a.w.validate();
    const GrayFrame pred = netpbm::read_gray(a.pred);
    const BinaryMask target = netpbm::read_binary_mask(a.target);
    const ad::Tensor p = ad::Tensor::constant({pred.height(), pred.width()}, {pred.data().begin(), pred.data().end()});
    const ad::Tensor m = bce_mask_loss(p, target);
    const ad::Tensor d = dice_loss(p, target);
    ad::Tensor b = ad::Tensor::scalar(0.0);
    if (!a.class_logits.empty() || !a.class_labels.empty()) {
        const auto logits = parse_list(a.class_logits, "--class-logits");
        const auto labels = parse_list(a.class_labels, "--class-labels");
        const std::size_t k = a.classes == 0 ? logits.size() : a.classes;
        if (k == 0 || logits.size() % k != 0) throw ShapeError("loss: logits do not split into rows of --classes");
        const std::size_t n = logits.size() / k;
        b = class_bce_loss(ad::Tensor::constant({n, k}, logits),
                           ad::Tensor::constant({labels.size() / k, k}, labels));
    }
    const ad::Tensor avs = avs_loss(m, d, b, a.w);
    ad::Tensor post = ad::Tensor::scalar(0.0);
    if (!a.post_label.empty()) post = post_mask_loss(p, netpbm::read_binary_mask(a.post_label));
    const ad::Tensor total = total_loss(avs, post, a.w);

    const std::vector<std::pair<const char*, double>> rows = {
        {"bce_mask", m.item()}, {"dice", d.item()},          {"class_bce", b.item()},
        {"avs", avs.item()},    {"post_mask", post.item()}, {"total", total.item()}};
    for (const auto& [k, v] : rows) out << k << ' ' << format_number(v) << '\n';
    Json j;
    j["record"] = "loss";
    for (const auto& [k, v] : rows) j[k] = round6(v);
    j["lambda_mask"] = round6(a.w.lambda_mask);
    j["lambda_dice"] = round6(a.w.lambda_dice);
    j["lambda_bce"] = round6(a.w.lambda_bce);
    j["lambda_mask_prime"] = round6(a.w.lambda_mask_prime);
    if (!a.out.empty()) write_text(a.out, j.dump() + "\n");
    return 0;
}

int cmd_metrics(const std::string& manifest, double beta2, bool macro, const std::string& out_path,
                std::ostream& out) {
    const auto averaging = macro ? metrics::Averaging::Macro : metrics::Averaging::Micro;
    const auto records = metrics::read_manifest(manifest);
    const metrics::EvalReport r = metrics::evaluate_manifest(manifest, beta2, averaging);

    std::ostringstream jl;
    char buf[256];
    out << "frame  line        iou\n";
    for (std::size_t i = 0; i < r.frame_iou.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%5zu %5zu %10s\n", i, records[i].line, format_number(r.frame_iou[i]).c_str());
        out << buf;
        Json j;
        j["record"] = "frame";
        j["index"] = i;
        j["line"] = records[i].line;
        j["iou"] = round6(r.frame_iou[i]);
        jl << j.dump() << '\n';
    }
    for (const auto& [k, v] : r.class_iou) {
        out << "class " << k << " iou " << format_number(v) << '\n';
        Json j;
        j["record"] = "class";
        j["class"] = k;
        j["iou"] = round6(v);
        jl << j.dump() << '\n';
    }
    out << "miou " << format_number(r.miou) << '\n';
    if (!r.class_iou.empty()) out << "miou_semantic " << format_number(r.miou_semantic) << '\n';
    out << "precision " << format_number(r.precision) << '\n';
    out << "recall " << format_number(r.recall) << '\n';
    out << "f_score " << format_number(r.f_score) << " (beta2 " << format_number(beta2) << ", "
        << (macro ? "macro" : "micro") << ")\n";
    out << "tp " << r.counts.tp << " fp " << r.counts.fp << " fn " << r.counts.fn << " tn " << r.counts.tn
        << " empty_frames " << r.empty_frames << '\n';
    Json s;
    s["record"] = "summary";
    s["frames"] = r.frame_iou.size();
    s["miou"] = round6(r.miou);
    if (!r.class_iou.empty()) s["miou_semantic"] = round6(r.miou_semantic);
    s["precision"] = round6(r.precision);
    s["recall"] = round6(r.recall);
    s["f_score"] = round6(r.f_score);
    s["beta2"] = round6(beta2);
    s["averaging"] = macro ? "macro" : "micro";
    s["tp"] = r.counts.tp;
    s["fp"] = r.counts.fp;
    s["fn"] = r.counts.fn;
    s["tn"] = r.counts.tn;
    s["empty_frames"] = r.empty_frames;
    jl << s.dump() << '\n';
    if (out_path.empty()) {
        out << jl.str();
    } else {
        write_text(out_path, jl.str());
    }
    return 0;
}

int cmd_gen_scene(const train::TrainConfig& cfg, bool eval_set, const std::string& out_dir, std::ostream& out) {
    const scene::SceneConfig& sc_cfg = eval_set ? cfg.eval_scene : cfg.train_scene;
    const scene::SceneSequence sc = scene::gen_scene(cfg.seed, sc_cfg);
    const fs::path dir(out_dir);
    ensure_dir(dir);
    const auto masks = flow_masks(sc.frames, cfg.tau);
    std::ostringstream manifest;
    for (std::size_t t = 0; t < sc.frames.size(); ++t) {
        const std::string frame = frame_name("frame", t, "ppm"), gt = frame_name("gt", t, "pgm"),
                          flow = frame_name("flowmask", t, "pgm");
        netpbm::write(dir / frame, sc.frames[t]);
        netpbm::write(dir / gt, sc.gt.mask(t));
        netpbm::write(dir / flow, masks[t]);
        Json j;
        j["frame"] = frame;
        j["flow"] = flow;
        j["gt"] = gt;
        j["pred"] = gt;
        j["prompt1"] = sc.prompt1.text;
        j["prompt2"] = sc.prompt2.text;
        manifest << j.dump() << '\n';
    }
    write_text(dir / "manifest.jsonl", manifest.str());

    Json meta;
    meta["seed"] = sc.seed;
    meta["frames"] = sc.frames.size();
    meta["grid"] = sc_cfg.grid;
    meta["prompt1"] = sc.prompt1.text;
    meta["prompt2"] = sc.prompt2.text;
    meta["sounding_classes"] = sc.sounding_classes();
    Json objects = Json::array();
    for (const auto& o : sc.objects) {
        Json jo;
        jo["role"] = scene::role_name(o.role);
        jo["class"] = scene::kClassNames[o.class_id];
        jo["row"] = o.row;
        jo["col"] = o.col;
        objects.push_back(jo);
    }
    meta["objects"] = objects;
    Json audio = Json::array();
    for (const auto& a : sc.audio) {
        Json row = Json::array();
        for (double v : a) row.push_back(round6(v));
        audio.push_back(row);
    }
    meta["audio"] = audio;
    write_text(dir / "scene.json", meta.dump(2) + "\n");

    out << "frames " << sc.frames.size() << " grid " << sc_cfg.grid << '\n';
    for (const auto& o : sc.objects) {
        out << "object " << scene::role_name(o.role) << ' ' << scene::kClassNames[o.class_id] << " row " << o.row
            << " col";
        for (auto c : o.col) out << ' ' << c;
        out << '\n';
    }
    out << "prompt1 " << sc.prompt1.text << '\n' << "prompt2 " << sc.prompt2.text << '\n';
    for (std::size_t t = 0; t < sc.frames.size(); ++t) {
        out << "frame " << t << " gt_pixels " << sc.gt.mask(t).count() << " flow_pixels " << masks[t].count() << '\n';
    }
    return 0;
}

int cmd_train(const train::TrainConfig& cfg, const std::string& out_path, std::ostream& out) {
    const train::TrainReport report = train::train(cfg);
    train::write_table(out, report);
    if (!out_path.empty()) {
        std::ostringstream jl;
        train::write_jsonl(jl, report);
        write_text(out_path, jl.str());
    }
    return 0;
}

int cmd_ablate(const train::TrainConfig& cfg, std::size_t num_seeds, const std::vector<std::string>& names,
               bool baseline_only, std::size_t workers, const std::string& out_path, std::ostream& out) {
    std::vector<train::Variant> variants;
    if (!baseline_only) {
        if (names.empty()) {
            variants = train::standard_variants();
        } else {
            for (const auto& n : names) variants.push_back(train::variant_by_name(n));
        }
    }
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < num_seeds; ++i) seeds.push_back(cfg.seed + i);
    const train::AblationReport report = train::ablate(cfg, variants, seeds, workers);
    out << "seeds";
    for (auto s : seeds) out << ' ' << s;
    out << '\n';
    train::write_table(out, report);
    if (!out_path.empty()) {
        std::ostringstream jl;
        train::write_jsonl(jl, report);
        write_text(out_path, jl.str());
    }
    return 0;
}

int cmd_vta_demo(const train::TrainConfig& cfg, const std::string& p1, const std::string& p2,
                 const std::string& image, std::ostream& out) {
    vta::VtaConfig vc = cfg.vta;
    const ImageFrame frame = netpbm::read_image(image);
    vc.channels = frame.channels();
    vc.out_dim = cfg.model.channels;
    vc.validate();
    Rng rng(derive_seed(cfg.seed, 5));
    const vta::VtaParams params = vta::VtaParams::init(vc, rng);
    const ad::Tensor vis = vta::embed_visual(frame, params, vc.patch);
    const vta::AttnMask vis_attn(vis.dim(0), 1);
    const vta::TextPrompt a1{p1, vta::PromptKind::SceneDescription}, a2{p2, vta::PromptKind::SoundingObjects};
    const vta::VtaOutput r = vta::align_prompts(a1, a2, vis, vis_attn, params);

    out << "visual_tokens " << vis.dim(0) << " patch " << vc.patch << '\n';
    for (const auto* tr : {&r.trace1, &r.trace2}) {
        const char* name = tr == &r.trace1 ? "prompt1" : "prompt2";
        out << name << " words";
        for (const auto& w : vta::split_words(tr == &r.trace1 ? p1 : p2)) out << ' ' << w;
        out << '\n' << name << " ids";
        for (auto id : tr->tokens.ids) out << ' ' << id;
        out << '\n' << name << " text_mask " << join_flags(tr->tokens.attn) << '\n';
        out << name << " unified_mask " << join_flags(tr->unified) << '\n';
    }
    out << "align1 " << join_numbers(r.align1.data()) << '\n';
    out << "align2 " << join_numbers(r.align2.data()) << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Audio-visual segmentation toolkit: flow pre-masking, losses, alignment, metrics, toy training"};
    app.name("ssp");
    app.require_subcommand(1);
    Common common;

    double tau = kDefaultTau;
    double beta2 = metrics::kDefaultBeta2;
    std::string out_path, out_dir, config_path, in_path, flow_mask, gt, frame, mask, manifest, prompt1, prompt2, image;
    std::vector<std::string> frames, flows, variants;
    bool masks = false, inference = false, macro = false, eval_set = false, baseline_only = false;
    std::size_t num_seeds = 5, workers = 1;
    LossArgs loss;

    auto* flow_align = app.add_subcommand("flow-align", "Frame-difference flow (or given flow fields) stretched to T frames");
    auto* frames_opt = flow_align->add_option("--frames", frames, "Consecutive frames (PGM/PPM), at least two");
    auto* flows_opt = flow_align->add_option("--flows", flows, "T-1 inter-frame flow magnitude images (PGM)");
    frames_opt->excludes(flows_opt);
    flow_align->add_option("--out-dir", out_dir, "Directory for flow_NNN.pgm (and mask_NNN.pgm)")->required();
    flow_align->add_option("--tau", tau, "Binarization threshold")->check(CLI::Range(0.0, 1.0));
    flow_align->add_flag("--masks", masks, "Also write binarized flow masks");

    auto* bin = app.add_subcommand("binarize", "Threshold a graymap into a binary mask");
    bin->add_option("--in", in_path, "Input graymap")->required();
    bin->add_option("--out", out_path, "Output mask")->required();
    bin->add_option("--tau", tau, "Threshold; pixel is set iff value > tau")->check(CLI::Range(0.0, 1.0));

    auto* pre = app.add_subcommand("premask", "Tri-valued pre-mask from a flow mask and ground truth");
    pre->add_option("--flow-mask", flow_mask, "Binary flow mask")->required();
    auto* gt_opt = pre->add_option("--gt", gt, "Binary ground-truth mask");
    auto* inf_opt = pre->add_flag("--inference", inference, "Test-time rule: 0.5 on the flow mask, no ground truth");
    gt_opt->excludes(inf_opt);
    pre->add_option("--out", out_path, "Output tri-mask")->required();

    auto* post = app.add_subcommand("postmask", "Post-mask label: flow mask AND ground truth");
    post->add_option("--flow-mask", flow_mask, "Binary flow mask")->required();
    post->add_option("--gt", gt, "Binary ground-truth mask")->required();
    post->add_option("--out", out_path, "Output mask")->required();

    auto* apply = app.add_subcommand("apply", "Multiply a frame by a tri-mask");
    apply->add_option("--frame", frame, "Input frame (PGM/PPM)")->required();
    apply->add_option("--mask", mask, "Tri-mask (PGM, levels 0/128/255)")->required();
    apply->add_option("--out", out_path, "Output frame")->required();

    auto* loss_cmd = app.add_subcommand("loss", "Loss components and weighted totals for a prediction");
    loss_cmd->add_option("--pred", loss.pred, "Probability map (PGM, value/255)")->required();
    loss_cmd->add_option("--target", loss.target, "Binary target mask")->required();
    loss_cmd->add_option("--post-label", loss.post_label, "Binary post-mask label");
    loss_cmd->add_option("--class-logits", loss.class_logits, "Comma-separated N*K logits, row-major");
    loss_cmd->add_option("--class-labels", loss.class_labels, "Comma-separated N*K {0,1} labels");
    loss_cmd->add_option("--classes", loss.classes, "K, the number of classes per row");
    loss_cmd->add_option("--lambda-mask", loss.w.lambda_mask, "Mask BCE weight");
    loss_cmd->add_option("--lambda-dice", loss.w.lambda_dice, "Dice weight");
    loss_cmd->add_option("--lambda-bce", loss.w.lambda_bce, "Classification BCE weight");
    loss_cmd->add_option("--lambda-mask-prime", loss.w.lambda_mask_prime, "Post-mask weight");
    loss_cmd->add_option("--out", loss.out, "Write the record here");

    auto* met = app.add_subcommand("metrics", "mIoU and F-score over a manifest");
    met->add_option("--manifest", manifest, "JSON-lines manifest")->required();
    met->add_option("--beta2", beta2, "F-measure beta^2")->check(CLI::NonNegativeNumber);
    met->add_flag("--macro", macro, "Average F per frame instead of pooling pixels");
    met->add_option("--out", out_path, "Write records here instead of standard output");

    auto* gen = app.add_subcommand("gen-scene", "Write one synthetic clip");
    gen->add_option("--config", config_path, "key = value config file");
    gen->add_option("--out-dir", out_dir, "Output directory")->required();
    gen->add_flag("--eval", eval_set, "Use the evaluation scene settings");

    auto* tr = app.add_subcommand("train", "Train and evaluate the toy model");
    tr->add_option("--config", config_path, "key = value config file");
    tr->add_option("--out", out_path, "Write JSON-lines report here");

    auto* abl = app.add_subcommand("ablate", "Train every variant over several seeds");
    abl->add_option("--config", config_path, "key = value config file (the base row)");
    abl->add_option("--seeds", num_seeds, "Number of seeds, starting at --seed")->check(CLI::PositiveNumber);
    abl->add_option("--variants", variants, "Variant names (default: the standard list)")->delimiter(',');
    abl->add_flag("--base-only", baseline_only, "Run only the base row");
    abl->add_option("--workers", workers, "Parallel training runs")->check(CLI::PositiveNumber);
    abl->add_option("--out", out_path, "Write JSON-lines report here");

    auto* demo = app.add_subcommand("vta-demo", "Run the two-pass alignment on two prompts and an image");
    demo->add_option("--prompt1", prompt1, "Scene description")->required();
    demo->add_option("--prompt2", prompt2, "Sounding-object list")->required();
    demo->add_option("--image", image, "Image (PGM/PPM), sides divisible by the patch size")->required();
    demo->add_option("--config", config_path, "key = value config file (vta.* keys)");

    for (auto* sub : {flow_align, bin, pre, post, apply, loss_cmd, met, gen, tr, abl, demo}) add_seed(sub, common);

    try {
        app.parse(argc, argv);
        if (flow_align->parsed() && frames.empty() && flows.empty()) {
            throw CLI::ValidationError("flow-align", "one of --frames or --flows is required");
        }
        if (pre->parsed() && gt.empty() && !inference) {
            throw CLI::ValidationError("premask", "--gt is required unless --inference is given");
        }
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n(run with --help for usage)\n";
        return 2;
    }

    try {
        const auto& subs = app.get_subcommands();
        CLI::App* sub = subs.front();
        std::ostringstream body;
        int code = 0;
        std::uint64_t seed = common.seed;
        if (sub == flow_align) {
            code = cmd_flow_align(frames, flows, out_dir, tau, masks, body);
        } else if (sub == bin) {
            code = cmd_binarize(in_path, out_path, tau, body);
        } else if (sub == pre) {
            code = cmd_premask(flow_mask, gt, inference, out_path, body);
        } else if (sub == post) {
            code = cmd_postmask(flow_mask, gt, out_path, body);
        } else if (sub == apply) {
            code = cmd_apply(frame, mask, out_path, body);
        } else if (sub == loss_cmd) {
            code = cmd_loss(loss, body);
        } else if (sub == met) {
            code = cmd_metrics(manifest, beta2, macro, out_path, body);
        } else {
            train::TrainConfig cfg = config_from(config_path, common, sub);
            seed = cfg.seed;
            if (sub == gen) {
                code = cmd_gen_scene(cfg, eval_set, out_dir, body);
            } else if (sub == tr) {
                code = cmd_train(cfg, out_path, body);
            } else if (sub == abl) {
                code = cmd_ablate(cfg, num_seeds, variants, baseline_only, workers, out_path, body);
            } else {
                code = cmd_vta_demo(cfg, prompt1, prompt2, image, body);
            }
        }
        out << "seed " << seed << '\n' << body.str();
        return code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ssp::cli
