#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>

#include "fcvg/error.hpp"
#include "fcvg/frame_io.hpp"
#include "fcvg/hash.hpp"
#include "fcvg/match_io.hpp"
#include "fcvg/metrics.hpp"
#include "fcvg/sampler.hpp"
#include "fcvg/synthetic.hpp"
#include "fcvg/toy_denoiser.hpp"
#include "json.hpp"

namespace fcvg::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

json file_record(const fs::path& path) { return {{"path", path.string()}, {"fnv1a", file_hash(path)}}; }

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json_file(const json& doc, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ParseError(path.string() + ": cannot write");
    out << doc.dump(2) << '\n';
}

std::string video_hash(const Video& v) {
    Fnv1a h;
    for (double x : v.values()) {
        const std::uint8_t b = quantize(x);
        h.update(std::as_bytes(std::span(&b, 1)));
    }
    return h.hex();
}

json frame_records(const std::vector<fs::path>& files) {
    json arr = json::array();
    for (const auto& f : files) arr.push_back({{"file", f.filename().string()}, {"fnv1a", file_hash(f)}});
    return arr;
}

std::string require_path(const json& cfg, const char* key) {
    const std::string v = cfg.at(key).get<std::string>();
    if (v.empty()) throw DomainError(std::string("missing required option --") + key);
    return v;
}

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

// A subcommand whose settings live in one JSON object: defaults, overlaid by
// --config, overlaid by explicitly given flags. Every key has a flag
// (underscores become dashes) and every flag has a key.
class Command {
public:
    Command(CLI::App& parent, const std::string& name, const std::string& description, json defaults)
        : app_(parent.add_subcommand(name, description)), defaults_(std::move(defaults)) {
        app_->add_option("--config", config_path_, "JSON config file or run manifest; flags take precedence");
        for (auto it = defaults_.begin(); it != defaults_.end(); ++it) {
            std::string flag = it.key();
            std::replace(flag.begin(), flag.end(), '_', '-');
            options_[it.key()] = app_->add_option("--" + flag, raw_[it.key()], "(default: " + it->dump() + ")");
        }
    }

    CLI::App* app() const { return app_; }

    json resolve() const {
        json cfg = defaults_;
        if (!config_path_.empty()) {
            json doc = read_json_file(config_path_);
            if (doc.is_object() && doc.value("format", "") == kRunManifestFormat) doc = doc.at("config");
            if (!doc.is_object()) throw ParseError(config_path_ + ": config must be a JSON object");
            for (auto it = doc.begin(); it != doc.end(); ++it) {
                if (!defaults_.contains(it.key())) {
                    throw ParseError(config_path_ + ": unknown config key '" + it.key() + "'");
                }
                if (!same_kind(defaults_[it.key()], *it)) {
                    throw ParseError(config_path_ + ": config key '" + it.key() + "' has the wrong type");
                }
                cfg[it.key()] = *it;
            }
        }
        for (const auto& [key, opt] : options_) {
            if (opt->count() == 0) continue;
            cfg[key] = convert(key, raw_.at(key), defaults_[key]);
        }
        return cfg;
    }

private:
    static bool same_kind(const json& def, const json& v) {
        if (def.is_null() || v.is_null()) return true;
        if (def.is_number()) return v.is_number() && (!def.is_number_integer() || v.is_number_integer());
        return def.type() == v.type();
    }

    static json convert(const std::string& key, const std::string& text, const json& def) {
        try {
            if (def.is_string()) return text;
            if (def.is_boolean()) {
                if (text == "true" || text == "1") return true;
                if (text == "false" || text == "0") return false;
                throw DomainError("expected true/false");
            }
            if (def.is_number_unsigned()) return std::stoull(text);
            if (def.is_number_integer()) return std::stoll(text);
            if (def.is_number()) return std::stod(text);
            return json::parse(text);
        } catch (const std::exception& e) {
            throw DomainError("invalid value '" + text + "' for --" + key + ": " + e.what());
        }
    }

    CLI::App* app_;
    json defaults_;
    std::string config_path_;
    std::map<std::string, std::string> raw_;
    std::map<std::string, CLI::Option*> options_;
};

EasingCurve curve_from(const json& cfg) {
    const EasingKind kind = parse_easing_kind(cfg.at("curve").get<std::string>());
    if (kind != EasingKind::piecewise) return EasingCurve(kind);
    const json& pts = cfg.at("control_points");
    if (!pts.is_array()) throw DomainError("piecewise curve needs control_points [[u,s], ...]");
    std::vector<EasingCurve::ControlPoint> points;
    for (const json& p : pts) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return EasingCurve::piecewise(std::move(points));
}

// ---------------------------------------------------------------- conditions

json conditions_defaults() {
    return {{"matches", ""},     {"out", ""},          {"frames", 25},      {"curve", "linear"},
            {"control_points", nullptr}, {"palette_seed", 0u}, {"format", "png"}};
}

int run_conditions(json cfg, std::ostream& out) {
    const fs::path matches = require_path(cfg, "matches");
    const fs::path dir = require_path(cfg, "out");
    const ConditionPair pair = to_condition_pair(load_match_file(matches));
    const auto seq = build_condition_sequences(pair.start, pair.end, cfg.at("frames").get<int>(), curve_from(cfg));
    const auto rasters = rasterize_all(seq.forward, cfg.at("palette_seed").get<std::uint64_t>());
    const auto files = save_condition_frames(rasters, dir, parse_frame_format(cfg.at("format").get<std::string>()));

    cfg["matches"] = absolute_or_empty(cfg["matches"]);
    cfg["out"] = absolute_or_empty(cfg["out"]);
    write_json_file({{"format", kRunManifestFormat},
                     {"command", "conditions"},
                     {"config", cfg},
                     {"inputs", {{"matches", file_record(matches)}}},
                     {"outputs", {{"frames", frame_records(files)}}}},
                    dir / "manifest.json");
    out << "wrote " << files.size() << " condition frames to " << dir.string() << '\n';
    return kOk;
}

// -------------------------------------------------------------------- sample

json sample_defaults() {
    return {{"start", ""},
            {"end", ""},
            {"matches", ""},
            {"out", ""},
            {"format", "png"},
            {"curve", "linear"},
            {"control_points", nullptr},
            {"steps", kDefaultSteps},
            {"gamma", 1.0},
            {"seed", 0u},
            {"frames", 25},
            {"schedule", "vp_cosine"},
            {"palette_seed", 0u},
            {"lambda", nullptr},
            {"denoiser", "analytic"},
            {"weights", ""},
            {"reference", ""},
            {"analytic",
             {{"prior_mean", 0.0},
              {"prior_variance", 0.25},
              {"anchor_first_frame", true},
              {"anchor_variance", 1e-6},
              {"cond_gain", 1.0}}}};
}

std::unique_ptr<Denoiser> make_denoiser(const json& cfg, const NoiseSchedule& sched, int frames, const Image& like) {
    const std::string kind = cfg.at("denoiser").get<std::string>();
    if (kind == "toy") {
        auto model = std::make_unique<ToyDenoiser>(ToyDenoiser::load(require_path(cfg, "weights")));
        if (model->architecture().channels != like.channels()) {
            throw StructuralError("toy weights expect " + std::to_string(model->architecture().channels) +
                                  " channels");
        }
        model->set_schedule(sched);
        return model;
    }
    if (kind != "analytic") throw DomainError("unknown denoiser '" + kind + "' (expected analytic or toy)");
    json a = sample_defaults()["analytic"];
    const json& given = cfg.at("analytic");
    if (!given.is_object()) throw DomainError("analytic settings must be an object");
    for (auto it = given.begin(); it != given.end(); ++it) {
        if (!a.contains(it.key())) throw DomainError("unknown analytic setting '" + it.key() + "'");
        a[it.key()] = *it;
    }
    const int C = like.channels(), H = like.height(), W = like.width();
    Video mu(frames, C, H, W, a.at("prior_mean").get<double>());
    Video var(frames, C, H, W, a.at("prior_variance").get<double>());
    const bool anchor = a.at("anchor_first_frame").get<bool>();
    if (anchor) {
        for (double& v : var.frame(0)) v = a.at("anchor_variance").get<double>();
    }
    return std::make_unique<AnalyticGaussianDenoiser>(sched, std::move(mu), std::move(var),
                                                      a.at("cond_gain").get<double>(), anchor);
}

int run_sample(json cfg, std::ostream& out) {
    const fs::path start_path = require_path(cfg, "start");
    const fs::path end_path = require_path(cfg, "end");
    const fs::path matches = require_path(cfg, "matches");
    const fs::path dir = require_path(cfg, "out");

    SamplerConfig sc;
    sc.steps = cfg.at("steps").get<int>();
    sc.gamma = cfg.at("gamma").get<double>();
    sc.seed = cfg.at("seed").get<std::uint64_t>();
    sc.frames = cfg.at("frames").get<int>();
    sc.schedule = parse_schedule_kind(cfg.at("schedule").get<std::string>());
    sc.palette_seed = cfg.at("palette_seed").get<std::uint64_t>();
    if (!cfg.at("lambda").is_null()) sc.lambda = cfg.at("lambda").get<std::vector<double>>();
    sc = sampler_config_from_json(to_json(sc), sc);
    sc.threads = threads_from_env();

    const Image start = read_image(start_path);
    const Image end = read_image(end_path);
    const ConditionPair pair = to_condition_pair(load_match_file(matches));
    const NoiseSchedule sched = make_schedule(sc.steps, sc.schedule);
    const auto denoiser = make_denoiser(cfg, sched, sc.frames, start);

    const SampleResult result = sample(start, end, pair.start, pair.end, curve_from(cfg), *denoiser, sc);

    const FrameFormat format = parse_frame_format(cfg.at("format").get<std::string>());
    const auto files = save_frames(result.video, dir, format);
    save_condition_frames(result.forward_conditions, dir / "conditions", format);

    std::optional<Video> reference;
    if (!cfg.at("reference").get<std::string>().empty()) reference = load_frames(cfg.at("reference").get<std::string>());
    const MetricsReport metrics = compute_metrics(result.video, start, end, reference ? &*reference : nullptr);
    write_json_file(to_json(metrics), dir / "metrics.json");

    json inputs = {{"start", file_record(start_path)}, {"end", file_record(end_path)}, {"matches", file_record(matches)}};
    if (cfg.at("denoiser") == "toy") inputs["weights"] = file_record(cfg.at("weights").get<std::string>());
    for (const char* key : {"start", "end", "matches", "out", "weights", "reference"}) {
        cfg[key] = absolute_or_empty(cfg[key]);
    }
    Fnv1a cond_hash;
    for (const auto& c : result.forward_conditions) cond_hash.update_values(std::span<const std::uint8_t>(c.pixels));

    write_json_file({{"format", kRunManifestFormat},
                     {"command", "sample"},
                     {"config", cfg},
                     {"inputs", inputs},
                     {"denoiser", denoiser->id()},
                     {"schedule", sched.to_json()},
                     {"lambda", result.lambda},
                     {"stats", {{"denoiser_calls", result.stats.denoiser_calls},
                                {"noise_draws", result.stats.noise_draws}}},
                     {"outputs",
                      {{"frames", frame_records(files)},
                       {"video_fnv1a", video_hash(result.video)},
                       {"conditions_fnv1a", cond_hash.hex()}}}},
                    dir / "manifest.json");
    out << "wrote " << files.size() << " frames to " << dir.string() << " (" << result.stats.denoiser_calls
        << " denoiser calls)\n";
    return kOk;
}

// ----------------------------------------------------------------- train-toy

json train_defaults() {
    return {{"spec", ""},     {"out", ""},          {"epochs", 30},        {"learning_rate", 0.1},
            {"seed", 0u},     {"init_seed", 0u},    {"hidden", 16},        {"clips", 20},
            {"steps", 10},    {"schedule", "vp_cosine"}, {"flip_augment", true}};
}

int run_train(json cfg, std::ostream& out) {
    const fs::path weights = require_path(cfg, "out");
    SyntheticSpec spec;
    const std::string spec_path = cfg.at("spec").get<std::string>();
    if (!spec_path.empty()) spec = synthetic_spec_from_json(read_json_file(spec_path));

    const auto data = synthetic_training_set(spec, cfg.at("clips").get<int>());
    ToyDenoiser model({3, cfg.at("hidden").get<int>()},
                      make_schedule(cfg.at("steps").get<int>(),
                                    parse_schedule_kind(cfg.at("schedule").get<std::string>())),
                      cfg.at("init_seed").get<std::uint64_t>());
    TrainConfig tc;
    tc.epochs = cfg.at("epochs").get<int>();
    tc.learning_rate = cfg.at("learning_rate").get<double>();
    tc.seed = cfg.at("seed").get<std::uint64_t>();
    tc.flip_augment = cfg.at("flip_augment").get<bool>();
    const TrainReport report =
        toy_train(model, data, tc, [&](int epoch, double loss) { out << "epoch " << epoch << " loss " << loss << '\n'; });

    if (weights.has_parent_path()) fs::create_directories(weights.parent_path());
    model.save(weights);
    cfg["spec"] = absolute_or_empty(cfg["spec"]);
    cfg["out"] = absolute_or_empty(cfg["out"]);
    json inputs = json::object();
    if (!spec_path.empty()) inputs["spec"] = file_record(spec_path);
    write_json_file({{"format", kRunManifestFormat},
                     {"command", "train-toy"},
                     {"config", cfg},
                     {"inputs", inputs},
                     {"synthetic", to_json(spec)},
                     {"parameter_count", model.parameter_count()},
                     {"epoch_losses", report.epoch_losses},
                     {"outputs", {{"weights", file_record(weights)}}}},
                    weights.string() + ".manifest.json");
    out << "wrote " << model.parameter_count() << " parameters to " << weights.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------------- eval

json eval_defaults() { return {{"frames", ""}, {"reference", ""}, {"start", ""}, {"end", ""}, {"out", ""}}; }

int run_eval(const json& cfg, std::ostream& out) {
    const Video video = load_frames(require_path(cfg, "frames"));
    std::optional<Video> reference;
    if (!cfg.at("reference").get<std::string>().empty()) reference = load_frames(cfg.at("reference").get<std::string>());
    auto key_frame = [&](const char* key, int index) {
        const std::string p = cfg.at(key).get<std::string>();
        if (!p.empty()) return read_image(p);
        return reference ? reference->frame_image(index < 0 ? reference->frames() - 1 : index)
                         : video.frame_image(index < 0 ? video.frames() - 1 : index);
    };
    const MetricsReport m = compute_metrics(video, key_frame("start", 0), key_frame("end", -1),
                                            reference ? &*reference : nullptr);
    const std::string dest = cfg.at("out").get<std::string>();
    if (dest.empty()) {
        out << to_json(m).dump(2) << '\n';
    } else {
        write_json_file(to_json(m), dest);
        out << "wrote metrics to " << dest << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------- demo

json demo_defaults() {
    return {{"out", ""},       {"seed", 0u},         {"frames", 9},         {"steps", kDefaultSteps},
            {"schedule", "vp_cosine"}, {"motion", "translate"}, {"magnitude", 8.0}, {"n_segments", 3},
            {"canvas", 32},    {"denoiser", "analytic"}, {"weights", ""}, {"gamma", 1.0},
            {"format", "png"}};
}

int run_demo(const json& cfg, std::ostream& out) {
    const fs::path dir = require_path(cfg, "out");
    SyntheticSpec spec;
    spec.canvas = {cfg.at("canvas").get<int>(), cfg.at("canvas").get<int>()};
    spec.n_segments = cfg.at("n_segments").get<int>();
    spec.motion = parse_motion_kind(cfg.at("motion").get<std::string>());
    spec.magnitude = cfg.at("magnitude").get<double>();
    spec.frames = cfg.at("frames").get<int>();
    spec.seed = cfg.at("seed").get<std::uint64_t>();
    const SyntheticClip clip = synth_clip(spec);

    fs::create_directories(dir);
    write_image(clip.clip.frame_image(0), dir / "start.png");
    write_image(clip.clip.frame_image(spec.frames - 1), dir / "end.png");
    save_match_file(match_file_from_pair(clip.start(), clip.end()), dir / "matches.json");
    save_frames(clip.clip, dir / "ground_truth", FrameFormat::png);

    json summary = {{"synthetic", to_json(spec)}};
    for (const auto& [label, gamma] : {std::pair<std::string, double>{"fcvg", cfg.at("gamma").get<double>()},
                                       std::pair<std::string, double>{"no_control", 0.0}}) {
        json s = sample_defaults();
        s["start"] = (dir / "start.png").string();
        s["end"] = (dir / "end.png").string();
        s["matches"] = (dir / "matches.json").string();
        s["out"] = (dir / label).string();
        s["reference"] = (dir / "ground_truth").string();
        s["frames"] = spec.frames;
        s["steps"] = cfg.at("steps");
        s["schedule"] = cfg.at("schedule");
        s["seed"] = spec.seed;
        s["palette_seed"] = spec.seed;
        s["gamma"] = gamma;
        s["format"] = cfg.at("format");
        s["denoiser"] = cfg.at("denoiser");
        s["weights"] = cfg.at("weights");
        run_sample(s, out);
        summary[label] = read_json_file(dir / label / "metrics.json");
    }
    write_json_file(summary, dir / "summary.json");
    out << "demo written to " << dir.string() << '\n';
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Frame-wise condition driven generative inbetweening"};
    app.require_subcommand(1);
    Command conditions(app, "conditions", "Interpolate and rasterize frame-wise conditions", conditions_defaults());
    Command sample_cmd(app, "sample", "Generate in-between frames with bidirectional sampling", sample_defaults());
    Command train(app, "train-toy", "Train the toy denoiser on synthetic moving-segment clips", train_defaults());
    Command eval(app, "eval", "Compute stability metrics for a frame directory", eval_defaults());
    Command demo(app, "demo", "End-to-end synthetic showcase", demo_defaults());

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (conditions.app()->parsed()) return run_conditions(conditions.resolve(), out);
        if (sample_cmd.app()->parsed()) return run_sample(sample_cmd.resolve(), out);
        if (train.app()->parsed()) return run_train(train.resolve(), out);
        if (eval.app()->parsed()) return run_eval(eval.resolve(), out);
        if (demo.app()->parsed()) return run_demo(demo.resolve(), out);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const UnsupportedError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

} // namespace fcvg::cli
