// facegen: identity-preserving face generation by feature-space descent.
//
// Subcommands:
//   generate      one optimization run (corpus retrieval or explicit guided images)
//   sweep-layers  rerun one setup across feature layers, tabulating pixel error
//   sweep-tv      rerun one setup across smoothing weights, tabulating final TV
//   net-make      build a seeded random network and save it
//   net-dump      print a weight file as text
//   demo-data     emit a small synthetic corpus for smoke runs

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "facegen/color_transfer.hpp"
#include "facegen/dataset.hpp"
#include "facegen/generator.hpp"
#include "facegen/guided_select.hpp"
#include "facegen/image_io.hpp"
#include "facegen/losses.hpp"
#include "facegen/network_io.hpp"
#include "facegen/spatial_mask.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            out.push_back(facegen::detail::trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(facegen::detail::trim(cur));
    return out;
}

std::vector<double> split_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const std::string& f : split_list(text))
        out.push_back(facegen::detail::parse_number(f, what));
    return out;
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DatasetOpts {
    std::string images, landmarks, attributes, exclude;
    bool augment_flip = false;

    bool given() const { return !images.empty(); }

    void attach(CLI::App* cmd) {
        cmd->add_option("--images", images, "Corpus image directory");
        cmd->add_option("--landmarks", landmarks, "Landmark CSV (id,x1,y1,...,x68,y68)");
        cmd->add_option("--attributes", attributes, "Attribute CSV with header id,<attr>,...");
        cmd->add_option("--exclude", exclude, "Exclusion list, one id per line");
        cmd->add_flag("--augment-flip", augment_flip,
                      "Add horizontally mirrored copies of every corpus entry");
    }

    std::vector<facegen::CorpusEntry> load() const {
        if (images.empty() || landmarks.empty() || attributes.empty())
            throw std::runtime_error("corpus mode needs --images, --landmarks and --attributes");
        return facegen::load_corpus(images, landmarks, attributes, exclude, augment_flip);
    }
};

struct RunOpts {
    std::string net_path;
    std::string ref;
    std::string ref_landmarks;
    std::string attrs;
    std::vector<std::string> guided_paths;
    std::string guided_weights;
    std::string layer;
    std::string rank_layer;
    double lambda = 1.0;
    double gamma = 0.0;
    double attr_weight = 1.0;
    double tv_beta = 2.0;
    double alpha = 0.5;
    int k = 5;
    std::string weight_scheme = "uniform";
    bool include_ref = false;
    std::string mask_mode = "off";
    double mask_margin = -1.0;  // <0: derive from image size
    std::string attr_map_path;
    bool mask_guided = false;
    std::string color_mode = "off";
    std::string init_mode = "blank-gray";
    std::uint64_t seed = 0;
    double lr = 0.05;
    int max_iters = 200;
    int window = 10;
    double rel_tol = 1e-4;
    double momentum = 0.0;
    bool no_clamp = false;
    std::string out_dir = "out";
    std::string format = "png";
    CLI::Option* window_opt = nullptr;

    void attach(CLI::App* cmd, bool with_layer) {
        cmd->add_option("--net", net_path, "Network weight file")->required();
        cmd->add_option("--ref", ref, "Reference face: corpus id or image path")->required();
        cmd->add_option("--ref-landmarks", ref_landmarks,
                        "Landmark CSV row for a path reference (needed with --mask on)");
        cmd->add_option("--attrs", attrs, "Attribute query, e.g. \"smiling>0,big-nose<0.5\"");
        cmd->add_option("--guided", guided_paths,
                        "Explicit guided image paths (skips corpus retrieval)");
        cmd->add_option("--guided-weights", guided_weights,
                        "Comma-separated weights for --guided images");
        if (with_layer) cmd->add_option("--layer", layer, "Feature layer of the loss")->required();
        cmd->add_option("--rank-layer", rank_layer,
                        "Feature layer for candidate ranking (default: --layer)");
        cmd->add_option("--lambda", lambda, "Identity loss weight");
        cmd->add_option("--gamma", gamma, "Total-variation weight");
        cmd->add_option("--attr-weight", attr_weight, "Attribute loss weight");
        cmd->add_option("--tv-beta", tv_beta, "Total-variation exponent");
        cmd->add_option("--alpha", alpha, "Pose/content mix for ranking, 0..1");
        cmd->add_option("--k", k, "Guided set size");
        cmd->add_option("--weights", weight_scheme, "Guided weight scheme")
            ->check(CLI::IsMember({"uniform", "inverse-distance"}));
        cmd->add_flag("--include-ref", include_ref,
                      "Keep the reference itself among the candidates");
        cmd->add_option("--mask", mask_mode, "Confine the attribute loss spatially")
            ->check(CLI::IsMember({"on", "off"}));
        cmd->add_option("--mask-margin", mask_margin, "Mask dilation radius in pixels");
        cmd->add_option("--attr-map", attr_map_path,
                        "Attribute-to-landmark CSV (default: built-in groups)");
        cmd->add_flag("--mask-guided", mask_guided, "Also mask the guided images");
        cmd->add_option("--color", color_mode, "Fit+apply a YCbCr color transform at the end")
            ->check(CLI::IsMember({"on", "off"}));
        cmd->add_option("--init", init_mode, "Target initialization")
            ->check(CLI::IsMember({"blank-gray", "seeded-noise", "reference-copy"}));
        cmd->add_option("--seed", seed, "Seed for every stochastic choice");
        cmd->add_option("--lr", lr, "Learning rate");
        cmd->add_option("--max-iters", max_iters, "Descent step limit");
        window_opt = cmd->add_option("--window", window, "Convergence window length");
        cmd->add_option("--rel-tol", rel_tol, "Relative decrease defining convergence");
        cmd->add_option("--momentum", momentum, "Momentum coefficient (0 = plain descent)");
        cmd->add_flag("--no-clamp", no_clamp, "Skip per-step clamping to [0,1]");
        cmd->add_option("--out", out_dir, "Output directory")->required();
        cmd->add_option("--format", format, "Image output format")
            ->check(CLI::IsMember({"png", "ppm"}));
    }

    facegen::ObjectiveConfig objective() const {
        facegen::ObjectiveConfig cfg;
        cfg.layer = layer;
        cfg.lambda = lambda;
        cfg.gamma = gamma;
        cfg.attr_weight = attr_weight;
        cfg.tv_beta = tv_beta;
        cfg.mask_guided = mask_guided;
        return cfg;
    }

    facegen::OptimizerConfig optimizer() const {
        facegen::OptimizerConfig cfg;
        cfg.learning_rate = lr;
        cfg.max_iters = max_iters;
        // The default window shrinks to fit short runs; an explicit
        // contradictory --window is left for validation to reject.
        cfg.convergence_window =
            window_opt != nullptr && window_opt->count() > 0 ? window : std::min(window, max_iters);
        cfg.convergence_rel_tol = rel_tol;
        cfg.init = facegen::parse_init_mode(init_mode);
        cfg.seed = seed;
        cfg.clamp_each_step = !no_clamp;
        cfg.momentum = momentum;
        return cfg;
    }
};

// Everything a run needs, resolved from files and flags.
struct Prepared {
    facegen::NetworkSpec net;
    facegen::GuidedSet guided;
    facegen::Image ref_image;
    std::optional<facegen::LandmarkSet> ref_landmarks;
    std::optional<facegen::Mask> mask;
    bool color = false;
    bool guided_image_mode = false;
};

facegen::LandmarkSet load_single_landmarks(const std::string& path, const std::string& ref_id) {
    auto table = facegen::load_landmark_table(path);
    if (table.empty()) throw std::runtime_error(path + ": no landmark rows");
    auto it = table.find(ref_id);
    if (it != table.end()) return it->second;
    if (table.size() == 1) return table.begin()->second;
    throw std::runtime_error(path + ": multiple rows and none matches id '" + ref_id + "'");
}

Prepared prepare(const RunOpts& opts, const DatasetOpts& dataset) {
    Prepared p;
    p.net = facegen::load_network(opts.net_path);
    p.color = opts.color_mode == "on";
    p.guided_image_mode = !opts.guided_paths.empty();

    facegen::AttributeQuery query = facegen::parse_attribute_query(opts.attrs);

    // Reference: a file path wins, otherwise a corpus id.
    std::vector<facegen::CorpusEntry> corpus;
    std::string ref_id = opts.ref;
    if (fs::exists(opts.ref) && fs::is_regular_file(opts.ref)) {
        p.ref_image = facegen::load_image(opts.ref);
        ref_id = fs::path(opts.ref).stem().string();
        if (!opts.ref_landmarks.empty())
            p.ref_landmarks = load_single_landmarks(opts.ref_landmarks, ref_id);
    } else {
        corpus = dataset.load();
        bool found = false;
        for (const facegen::CorpusEntry& e : corpus)
            if (e.id == opts.ref) {
                p.ref_image = e.image;
                p.ref_landmarks = e.landmarks;
                found = true;
                break;
            }
        if (!found)
            throw std::runtime_error("reference id '" + opts.ref + "' is not in the corpus and " +
                                     "is not an image file");
    }

    if (p.guided_image_mode) {
        std::vector<facegen::Image> images;
        for (const std::string& path : opts.guided_paths)
            images.push_back(facegen::load_image(path));
        std::vector<double> weights;
        if (!opts.guided_weights.empty())
            weights = split_doubles(opts.guided_weights, "--guided-weights");
        else
            weights.assign(images.size(), 1.0 / images.size());
        if (weights.size() != images.size())
            throw std::runtime_error("--guided-weights count does not match --guided");
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (sum <= 0.0) throw std::runtime_error("--guided-weights must sum to a positive value");
        for (double& w : weights) w /= sum;
        p.guided = facegen::make_guided_set(images, weights);
    } else {
        if (corpus.empty()) corpus = dataset.load();
        facegen::SelectionConfig sel;
        sel.query = query;
        sel.k = opts.k;
        sel.alpha = opts.alpha;
        sel.layer = opts.rank_layer.empty() ? opts.layer : opts.rank_layer;
        sel.weight_scheme = facegen::parse_weight_scheme(opts.weight_scheme);
        sel.exclude_reference = !opts.include_ref;
        facegen::CorpusEntry ref_entry;
        ref_entry.id = ref_id;
        ref_entry.image = p.ref_image;
        if (p.ref_landmarks) ref_entry.landmarks = *p.ref_landmarks;
        else throw std::runtime_error("corpus retrieval needs reference landmarks");
        p.guided = facegen::select_guided_set(corpus, sel, ref_entry, p.net);
    }

    if (opts.mask_mode == "on") {
        if (query.empty())
            throw std::runtime_error("--mask on needs --attrs to name the masked attributes");
        if (!p.ref_landmarks)
            throw std::runtime_error("--mask on needs reference landmarks "
                                     "(corpus reference or --ref-landmarks)");
        facegen::AttributeLandmarkMap map = opts.attr_map_path.empty()
                                                ? facegen::default_attribute_landmarks()
                                                : facegen::load_attribute_landmarks(opts.attr_map_path);
        double margin = opts.mask_margin >= 0.0
                            ? opts.mask_margin
                            : facegen::default_mask_margin(p.ref_image.height(),
                                                           p.ref_image.width());
        p.mask = facegen::build_mask(query.names(), *p.ref_landmarks, map, margin,
                                     p.ref_image.height(), p.ref_image.width());
    }
    return p;
}

// ---------------------------------------------------------------------------
// Output writers
// ---------------------------------------------------------------------------

void write_image(const facegen::Image& img, const fs::path& dir, const std::string& stem,
                 const std::string& format) {
    facegen::save_image(img, (dir / (stem + "." + format)).string());
}

void write_trace(const std::vector<facegen::TraceRow>& trace, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "iter,total,attr,id,tv,sqerr\n";
    out.precision(17);
    for (const facegen::TraceRow& r : trace)
        out << r.iter << "," << r.total << "," << r.attr << "," << r.id << "," << r.tv << ","
            << r.sqerr << "\n";
}

void write_color_sidecar(const facegen::ColorTransform& t, const fs::path& path) {
    json j;
    j["matrix"] = {{t.matrix[0][0], t.matrix[0][1], t.matrix[0][2]},
                   {t.matrix[1][0], t.matrix[1][1], t.matrix[1][2]},
                   {t.matrix[2][0], t.matrix[2][1], t.matrix[2][2]}};
    j["residual"] = t.residual;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_config(const RunOpts& opts, const DatasetOpts& dataset, const Prepared& p,
                  const fs::path& path, const std::vector<std::string>& extra = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "net = " << opts.net_path << "\n";
    out << "ref = " << opts.ref << "\n";
    out << "attrs = " << opts.attrs << "\n";
    out << "mode = " << (p.guided_image_mode ? "guided-image" : "corpus") << "\n";
    out << "layer = " << opts.layer << "\n";
    out << "rank_layer = " << (opts.rank_layer.empty() ? opts.layer : opts.rank_layer) << "\n";
    out << "lambda = " << fmt(opts.lambda) << "\n";
    out << "gamma = " << fmt(opts.gamma) << "\n";
    out << "attr_weight = " << fmt(opts.attr_weight) << "\n";
    out << "tv_beta = " << fmt(opts.tv_beta) << "\n";
    out << "alpha = " << fmt(opts.alpha) << "\n";
    out << "k = " << opts.k << "\n";
    out << "weights = " << opts.weight_scheme << "\n";
    out << "include_ref = " << (opts.include_ref ? "true" : "false") << "\n";
    out << "mask = " << opts.mask_mode << "\n";
    if (p.mask)
        out << "mask_margin = "
            << fmt(opts.mask_margin >= 0.0
                       ? opts.mask_margin
                       : facegen::default_mask_margin(p.ref_image.height(), p.ref_image.width()))
            << "\n";
    out << "mask_guided = " << (opts.mask_guided ? "true" : "false") << "\n";
    out << "color = " << opts.color_mode << "\n";
    out << "init = " << opts.init_mode << "\n";
    out << "seed = " << opts.seed << "\n";
    out << "lr = " << fmt(opts.lr) << "\n";
    out << "max_iters = " << opts.max_iters << "\n";
    out << "window = " << opts.window << "\n";
    out << "rel_tol = " << fmt(opts.rel_tol) << "\n";
    out << "momentum = " << fmt(opts.momentum) << "\n";
    out << "clamp_each_step = " << (opts.no_clamp ? "false" : "true") << "\n";
    out << "format = " << opts.format << "\n";
    if (dataset.given()) {
        out << "images = " << dataset.images << "\n";
        out << "landmarks = " << dataset.landmarks << "\n";
        out << "attributes = " << dataset.attributes << "\n";
        out << "exclude = " << dataset.exclude << "\n";
        out << "augment_flip = " << (dataset.augment_flip ? "true" : "false") << "\n";
    }
    for (std::size_t i = 0; i < p.guided.entries.size(); ++i) {
        const facegen::GuidedEntry& e = p.guided.entries[i];
        out << "guided." << i << " = " << (e.id.empty() ? "<explicit>" : e.id)
            << " weight=" << fmt(e.weight) << " distance=" << fmt(e.distance) << "\n";
    }
    for (const std::string& line : extra) out << line << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int run_generate(const RunOpts& opts, const DatasetOpts& dataset) {
    Prepared p = prepare(opts, dataset);
    fs::create_directories(opts.out_dir);
    fs::path dir(opts.out_dir);
    const facegen::Mask* mask = p.mask ? &*p.mask : nullptr;
    if (p.mask) facegen::save_pgm(*p.mask, (dir / "mask.pgm").string());
    write_config(opts, dataset, p, dir / "config.resolved");

    try {
        facegen::GenerationResult result = facegen::run_generation(
            p.net, opts.objective(), opts.optimizer(), p.guided, p.ref_image, mask, p.color);
        write_image(result.image, dir, "generated", opts.format);
        if (result.color_applied) {
            write_image(result.raw_image, dir, "generated_raw", opts.format);
            write_color_sidecar(result.color, dir / "color.json");
        }
        write_trace(result.trace, dir / "trace.csv");
        std::cout << (result.converged ? "converged" : "stopped") << " after "
                  << result.steps_taken << " steps (" << result.iterations_run
                  << " evaluations); total " << fmt(result.trace.front().total) << " -> "
                  << fmt(result.trace.back().total) << "\n";
        if (result.rolled_back)
            std::cout << "warning: loss ended above its start; best iterate returned\n";
        std::cout << "wrote " << (dir / ("generated." + opts.format)).string() << "\n";
        return 0;
    } catch (const facegen::DivergenceError& e) {
        write_image(e.last_good, dir, "last_good", opts.format);
        std::cerr << "error: " << e.what() << "; last good iterate saved to "
                  << (dir / ("last_good." + opts.format)).string() << "\n";
        return 1;
    }
}

int run_sweep(const RunOpts& opts, const DatasetOpts& dataset, const std::string& layers_arg,
              const std::string& gammas_arg) {
    Prepared p = prepare(opts, dataset);
    fs::create_directories(opts.out_dir);
    fs::path dir(opts.out_dir);
    const facegen::Mask* mask = p.mask ? &*p.mask : nullptr;
    if (p.mask) facegen::save_pgm(*p.mask, (dir / "mask.pgm").string());

    std::vector<facegen::SweepRun> runs;
    std::string metric_name;
    if (!layers_arg.empty()) {
        metric_name = "final_sqerr";
        runs = facegen::layer_sweep(p.net, opts.objective(), opts.optimizer(), p.guided,
                                    p.ref_image, split_list(layers_arg), mask, p.color);
    } else {
        metric_name = "final_tv";
        runs = facegen::tv_sweep(p.net, opts.objective(), opts.optimizer(), p.guided, p.ref_image,
                                 split_doubles(gammas_arg, "--gammas"), mask, p.color);
    }

    std::vector<std::string> extra;
    extra.push_back(!layers_arg.empty() ? "sweep = layers over " + layers_arg
                                        : "sweep = gamma over " + gammas_arg);
    write_config(opts, dataset, p, dir / "config.resolved", extra);

    std::ofstream table(dir / "sweep.csv");
    table << (!layers_arg.empty() ? "layer" : "gamma") << "," << metric_name << "\n";
    table.precision(17);
    for (const facegen::SweepRun& run : runs) {
        std::string stem = (!layers_arg.empty() ? "layer_" : "gamma_") + run.label;
        for (char& ch : stem)
            if (ch == '.' || ch == '/') ch = '_';
        write_image(run.result.image, dir, stem, opts.format);
        write_trace(run.result.trace, dir / ("trace_" + stem + ".csv"));
        table << run.label << "," << run.metric << "\n";
        std::cout << run.label << ": " << metric_name << " = " << fmt(run.metric) << "\n";
    }
    std::cout << "wrote " << (dir / "sweep.csv").string() << "\n";
    return 0;
}

// Synthetic corpus: smooth random faces plus a plausible landmark template.
// Enough structure for masks and retrieval to behave; no claim of realism.
struct DemoOpts {
    std::string out_dir = "demo";
    int count = 12;
    int height = 24;
    int width = 24;
    std::uint64_t seed = 7;
};

facegen::LandmarkSet demo_landmarks(int h, int w, facegen::SeededRng& rng) {
    facegen::LandmarkSet lm;
    auto place = [&](int index, double nx, double ny) {
        double jx = rng.next_uniform(-0.015, 0.015);
        double jy = rng.next_uniform(-0.015, 0.015);
        lm.points[index].x = std::min<double>(w - 1.0, std::max(0.0, (nx + jx) * (w - 1)));
        lm.points[index].y = std::min<double>(h - 1.0, std::max(0.0, (ny + jy) * (h - 1)));
    };
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < 17; ++i) {  // jaw arc, ear to ear through the chin
        double a = pi + pi * i / 16.0;
        place(i, 0.5 + 0.40 * std::cos(a), 0.45 - 0.42 * std::sin(a));
    }
    for (int i = 0; i < 5; ++i) {  // brows
        place(17 + i, 0.22 + 0.05 * i, 0.30 - 0.02 * std::sin(pi * i / 4.0));
        place(22 + i, 0.58 + 0.05 * i, 0.30 - 0.02 * std::sin(pi * i / 4.0));
    }
    for (int i = 0; i < 4; ++i) place(27 + i, 0.5, 0.36 + 0.05 * i);  // nose bridge
    for (int i = 0; i < 5; ++i) place(31 + i, 0.42 + 0.04 * i, 0.56);  // nostrils
    for (int i = 0; i < 6; ++i) {  // eyes
        double a = pi * i / 3.0;
        place(36 + i, 0.32 + 0.07 * std::cos(a), 0.385 - 0.03 * std::sin(a));
        place(42 + i, 0.68 + 0.07 * std::cos(a), 0.385 - 0.03 * std::sin(a));
    }
    for (int i = 0; i < 12; ++i) {  // outer lip
        double a = 2.0 * pi * i / 12.0;
        place(48 + i, 0.5 + 0.16 * std::cos(a), 0.70 - 0.07 * std::sin(a));
    }
    for (int i = 0; i < 8; ++i) {  // inner lip
        double a = 2.0 * pi * i / 8.0;
        place(60 + i, 0.5 + 0.10 * std::cos(a), 0.70 - 0.035 * std::sin(a));
    }
    return lm;
}

facegen::Image demo_image(int h, int w, facegen::SeededRng& rng) {
    facegen::Image img(3, h, w);
    std::array<double, 3> base = {rng.next_uniform(0.3, 0.7), rng.next_uniform(0.3, 0.7),
                                  rng.next_uniform(0.3, 0.7)};
    struct Blob {
        double cx, cy, r, gain;
        int channel;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 5; ++i)
        blobs.push_back({rng.next_uniform(0.2, 0.8) * w, rng.next_uniform(0.2, 0.8) * h,
                         rng.next_uniform(0.15, 0.45) * std::min(h, w),
                         rng.next_uniform(-0.3, 0.3), static_cast<int>(rng.next_below(3))});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + 0.1 * (static_cast<double>(x) / w - 0.5);
                for (const Blob& b : blobs)
                    if (b.channel == c) {
                        double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
                        v += b.gain * std::exp(-d2 / (2.0 * b.r * b.r));
                    }
                img.at(c, y, x) = std::min(1.0, std::max(0.0, v));
            }
    return img;
}

int run_demo_data(const DemoOpts& opts) {
    if (opts.count < 2 || opts.height < 8 || opts.width < 8)
        throw std::runtime_error("demo-data: need count >= 2 and size >= 8");
    fs::path dir(opts.out_dir);
    fs::create_directories(dir / "images");

    facegen::SeededRng rng(opts.seed);
    facegen::AttributeTable attrs;
    attrs.names = {"eyeglasses", "smiling", "big-nose"};
    std::vector<std::pair<std::string, facegen::LandmarkSet>> landmark_rows;
    for (int i = 0; i < opts.count; ++i) {
        std::ostringstream id_stream;
        id_stream << "face" << std::setw(3) << std::setfill('0') << i;
        std::string id = id_stream.str();
        facegen::save_image(demo_image(opts.height, opts.width, rng),
                            (dir / "images" / (id + ".png")).string());
        landmark_rows.emplace_back(id, demo_landmarks(opts.height, opts.width, rng));
        std::vector<double> scores;
        for (std::size_t a = 0; a < attrs.names.size(); ++a)
            scores.push_back(rng.next_uniform(-1.5, 1.5));
        attrs.rows.emplace_back(id, std::move(scores));
    }
    facegen::save_landmark_table(landmark_rows, (dir / "landmarks.csv").string());
    facegen::save_attribute_table(attrs, (dir / "attributes.csv").string());
    std::cout << "wrote " << opts.count << " faces under " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"identity-preserving face generation by feature-space descent"};
    app.require_subcommand(1);

    RunOpts gen_opts;
    DatasetOpts gen_data;
    CLI::App* gen = app.add_subcommand("generate", "Run one generation");
    gen_opts.attach(gen, /*with_layer=*/true);
    gen_data.attach(gen);

    RunOpts layers_opts;
    DatasetOpts layers_data;
    std::string layers_arg;
    CLI::App* sweep_layers = app.add_subcommand("sweep-layers", "Rerun across feature layers");
    layers_opts.attach(sweep_layers, /*with_layer=*/true);
    layers_data.attach(sweep_layers);
    sweep_layers->add_option("--layers", layers_arg, "Comma-separated layer names")->required();

    RunOpts tv_opts;
    DatasetOpts tv_data;
    std::string gammas_arg;
    CLI::App* sweep_tv = app.add_subcommand("sweep-tv", "Rerun across smoothing weights");
    tv_opts.attach(sweep_tv, /*with_layer=*/true);
    tv_data.attach(sweep_tv);
    sweep_tv->add_option("--gammas", gammas_arg, "Comma-separated gamma values")->required();

    std::string make_arch = "tiny-a";
    std::uint64_t make_seed = 0;
    std::string make_out;
    CLI::App* net_make = app.add_subcommand("net-make", "Build a seeded random network");
    net_make->add_option("--arch", make_arch,
                         "Preset (tiny-a/tiny-b/tiny-c) or descriptor like "
                         "\"conv:c1,4,3;relu:r1;pool:p1,2\"");
    net_make->add_option("--seed", make_seed, "Weight seed");
    net_make->add_option("--out", make_out, "Weight file to write")->required();

    std::string dump_net;
    std::string dump_out;
    CLI::App* net_dump = app.add_subcommand("net-dump", "Print a weight file as text");
    net_dump->add_option("--net", dump_net, "Weight file")->required();
    net_dump->add_option("--out", dump_out, "Text file (default: stdout)");

    DemoOpts demo_opts;
    CLI::App* demo = app.add_subcommand("demo-data", "Emit a small synthetic corpus");
    demo->add_option("--out", demo_opts.out_dir, "Output directory");
    demo->add_option("--count", demo_opts.count, "Number of faces");
    demo->add_option("--height", demo_opts.height, "Image height");
    demo->add_option("--width", demo_opts.width, "Image width");
    demo->add_option("--seed", demo_opts.seed, "Corpus seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_generate(gen_opts, gen_data);
        if (sweep_layers->parsed()) return run_sweep(layers_opts, layers_data, layers_arg, "");
        if (sweep_tv->parsed()) return run_sweep(tv_opts, tv_data, "", gammas_arg);
        if (net_make->parsed()) {
            facegen::save_network(facegen::make_seeded_network(make_seed, make_arch), make_out);
            std::cout << "wrote " << make_out << "\n";
            return 0;
        }
        if (net_dump->parsed()) {
            std::ostringstream dump_text;
            facegen::dump_network_text(facegen::load_network(dump_net), dump_text);
            std::string text = dump_text.str();
            if (dump_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(dump_out);
                if (!out) throw std::runtime_error("cannot write " + dump_out);
                out << text;
            }
            return 0;
        }
        if (demo->parsed()) return run_demo_data(demo_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
