#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fcvg/denoiser.hpp"
#include "fcvg/error.hpp"
#include "fcvg/match_io.hpp"
#include "fcvg/metrics.hpp"
#include "fcvg/sampler.hpp"
#include "fcvg/synthetic.hpp"

namespace py = pybind11;
using namespace fcvg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Video to_video(const Array& a) {
    if (a.ndim() != 4) throw StructuralError("expected an N x C x H x W array");
    Video v(a.shape(0), a.shape(1), a.shape(2), a.shape(3));
    std::copy(a.data(), a.data() + a.size(), v.values().begin());
    return v;
}

Image to_image(const Array& a) {
    if (a.ndim() != 3) throw StructuralError("expected a C x H x W array");
    Image img(a.shape(0), a.shape(1), a.shape(2));
    std::copy(a.data(), a.data() + a.size(), img.values().begin());
    return img;
}

Array from_video(const Video& v) {
    Array out({v.frames(), v.channels(), v.height(), v.width()});
    std::copy(v.values().begin(), v.values().end(), out.mutable_data());
    return out;
}

Array from_image(const Image& img) {
    Array out({img.channels(), img.height(), img.width()});
    std::copy(img.values().begin(), img.values().end(), out.mutable_data());
    return out;
}

EasingCurve make_curve(const std::string& kind, const std::optional<std::vector<std::pair<double, double>>>& points) {
    const EasingKind k = parse_easing_kind(kind);
    if (k == EasingKind::piecewise) {
        if (!points) throw DomainError("piecewise curve needs control_points");
        return EasingCurve::piecewise(*points);
    }
    return EasingCurve(k);
}

py::dict metrics_dict(const MetricsReport& m) {
    py::dict d;
    d["endpoint_mse_start"] = m.endpoint_mse_start;
    d["endpoint_mse_end"] = m.endpoint_mse_end;
    d["psnr_start"] = m.psnr_start;
    d["psnr_end"] = m.psnr_end;
    d["smoothness"] = m.smoothness ? py::object(py::float_(*m.smoothness)) : py::object(py::none());
    d["trajectory_deviation"] = m.trajectory_deviation;
    d["ground_truth_mse"] = m.ground_truth_mse ? py::object(py::float_(*m.ground_truth_mse)) : py::object(py::none());
    return d;
}

py::array_t<std::uint8_t> frames_to_array(const std::vector<ConditionFrame>& frames) {
    const int h = frames.empty() ? 0 : frames[0].height, w = frames.empty() ? 0 : frames[0].width;
    py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(h),
                                   static_cast<py::ssize_t>(w), static_cast<py::ssize_t>(3)});
    auto* dst = out.mutable_data();
    for (const auto& f : frames) dst = std::copy(f.pixels.begin(), f.pixels.end(), dst);
    return out;
}

} // namespace

PYBIND11_MODULE(_fcvg, m) {
    m.doc() = "Frame-wise condition driven inbetweening core";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);

    m.def("eval_easing",
          [](const std::string& kind, double u, std::optional<std::vector<std::pair<double, double>>> points) {
              return eval_easing(make_curve(kind, points), u);
          },
          py::arg("kind"), py::arg("u"), py::arg("control_points") = py::none());

    m.def("fusion_weights", &fusion_weights, py::arg("frames"));
    m.def("flip_time", [](const Array& z) { return from_video(flip_time(to_video(z))); }, py::arg("z"));
    m.def("fuse",
          [](const Array& fwd, const Array& bwd, const std::vector<double>& w) {
              return from_video(fuse(to_video(fwd), to_video(bwd), w));
          },
          py::arg("z_fwd"), py::arg("z_bwd_flipped"), py::arg("weights"));

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def(py::init([](int steps, const std::string& kind) { return make_schedule(steps, parse_schedule_kind(kind)); }),
             py::arg("steps") = kDefaultSteps, py::arg("kind") = "vp_cosine")
        .def_property_readonly("steps", &NoiseSchedule::steps)
        .def_property_readonly("alphas", &NoiseSchedule::alphas)
        .def_property_readonly("sigmas", &NoiseSchedule::sigmas)
        .def("add_noise", [](const NoiseSchedule& s, const Array& z, const Array& eps, int t) {
            return from_video(add_noise(to_video(z), to_video(eps), t, s));
        })
        .def("v_target", [](const NoiseSchedule& s, const Array& z, const Array& eps, int t) {
            return from_video(v_target(to_video(z), to_video(eps), t, s));
        })
        .def("v_to_x0", [](const NoiseSchedule& s, const Array& zt, const Array& v, int t) {
            return from_video(v_to_x0(to_video(zt), to_video(v), t, s));
        })
        .def("ddim_step", [](const NoiseSchedule& s, const Array& zt, const Array& x0, int t) {
            return from_video(ddim_step(to_video(zt), to_video(x0), t, s));
        });

    m.def("cross_normalize",
          [](const Array& con, const Array& base) { return from_image(cross_normalize(to_image(con), to_image(base))); },
          py::arg("y_con"), py::arg("y_base"));

    m.def("rasterize_conditions",
          [](const std::string& match_path, int frames, const std::string& curve,
             std::optional<std::vector<std::pair<double, double>>> points, std::uint64_t palette_seed) {
              const auto pair = to_condition_pair(load_match_file(match_path));
              const auto seq = build_condition_sequences(pair.start, pair.end, frames, make_curve(curve, points));
              return frames_to_array(rasterize_all(seq.forward, palette_seed));
          },
          py::arg("match_path"), py::arg("frames"), py::arg("curve") = "linear", py::arg("control_points") = py::none(),
          py::arg("palette_seed") = 0,
          "Forward condition rasters as an N x H x W x 3 uint8 array.");

    m.def("sample",
          [](const Array& start, const Array& end, const std::string& match_path, int frames, int steps, double gamma,
             std::uint64_t seed, const std::string& curve, const std::string& schedule, std::uint64_t palette_seed,
             double prior_mean, double prior_variance, double anchor_variance, double cond_gain) {
              const Image s = to_image(start), e = to_image(end);
              const auto pair = to_condition_pair(load_match_file(match_path));
              SamplerConfig cfg;
              cfg.frames = frames;
              cfg.steps = steps;
              cfg.gamma = gamma;
              cfg.seed = seed;
              cfg.schedule = parse_schedule_kind(schedule);
              cfg.palette_seed = palette_seed;
              cfg.threads = threads_from_env();
              Video mu(frames, s.channels(), s.height(), s.width(), prior_mean);
              Video var(frames, s.channels(), s.height(), s.width(), prior_variance);
              for (double& v : var.frame(0)) v = anchor_variance;
              const AnalyticGaussianDenoiser d(make_schedule(steps, cfg.schedule), mu, var, cond_gain, true);
              SampleResult r;
              {
                  py::gil_scoped_release release;
                  r = fcvg::sample(s, e, pair.start, pair.end, make_curve(curve, std::nullopt), d, cfg);
              }
              py::dict out;
              out["video"] = from_video(r.video);
              out["lambda"] = r.lambda;
              out["denoiser_calls"] = r.stats.denoiser_calls;
              out["conditions"] = frames_to_array(r.forward_conditions);
              return out;
          },
          py::arg("start"), py::arg("end"), py::arg("match_path"), py::arg("frames") = 25,
          py::arg("steps") = kDefaultSteps, py::arg("gamma") = 1.0, py::arg("seed") = 0, py::arg("curve") = "linear",
          py::arg("schedule") = "vp_cosine", py::arg("palette_seed") = 0, py::arg("prior_mean") = 0.0,
          py::arg("prior_variance") = 0.25, py::arg("anchor_variance") = 1e-6, py::arg("cond_gain") = 1.0,
          "Bidirectional sampling with the analytic Gaussian denoiser.");

    m.def("synth_clip",
          [](int canvas, int n_segments, const std::string& motion, double magnitude, int frames, std::uint64_t seed,
             std::optional<std::string> match_path) {
              SyntheticSpec spec;
              spec.canvas = {canvas, canvas};
              spec.n_segments = n_segments;
              spec.motion = parse_motion_kind(motion);
              spec.magnitude = magnitude;
              spec.frames = frames;
              spec.seed = seed;
              const auto clip = synth_clip(spec);
              if (match_path) save_match_file(match_file_from_pair(clip.start(), clip.end()), *match_path);
              return from_video(clip.clip);
          },
          py::arg("canvas") = 32, py::arg("n_segments") = 3, py::arg("motion") = "translate", py::arg("magnitude") = 8.0,
          py::arg("frames") = 9, py::arg("seed") = 0, py::arg("match_path") = py::none(),
          "Synthetic moving-segment clip; optionally writes its key-frame match file.");

    m.def("compute_metrics",
          [](const Array& video, const Array& start, const Array& end, std::optional<Array> gt) {
              const Video v = to_video(video);
              std::optional<Video> g;
              if (gt) g = to_video(*gt);
              return metrics_dict(compute_metrics(v, to_image(start), to_image(end), g ? &*g : nullptr));
          },
          py::arg("video"), py::arg("start"), py::arg("end"), py::arg("ground_truth") = py::none());
}
