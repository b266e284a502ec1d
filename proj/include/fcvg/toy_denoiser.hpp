#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fcvg/denoiser.hpp"

namespace fcvg {

/// Layer sizes of the toy v-prediction network. All convolutions are 3×3 with
/// zero padding, so any spatial size works; training uses 32×32.
struct ToyArchitecture {
    int channels = 3;
    int hidden = 16;
    bool operator==(const ToyArchitecture&) const = default;
};

/// One training example: a clean clip, the key frame it starts from, and the
/// frame-aligned condition rasters.
struct TrainingClip {
    Video clip;
    Image endpoint;
    Video conditions;
};

/// A fully specified draw of the v-prediction objective.
struct TrainingSample {
    Video clip;
    Image endpoint;
    Video conditions;
    int t = 1;
    Video noise;
    double gamma = 1.0;
};

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    bool flip_augment = true;
};

struct TrainReport {
    std::vector<double> step_losses;
    std::vector<double> epoch_losses;
};

/// Small convolutional denoiser predicting v.
///
///   h1 = tanh(conv1([z_t, endpoint, sigma_t, frame position]))
///   hc = tanh(conv_cond(c_i))                       (skipped when gamma == 0)
///   h  = h1 + gamma · cross_normalize(hc, h1)
///   v  = conv3(tanh(conv2(h)))
///
/// predict() returns the clean-latent estimate alpha_t·z_t - sigma_t·v.
class ToyDenoiser final : public Denoiser {
public:
    ToyDenoiser(ToyArchitecture arch, NoiseSchedule schedule, std::uint64_t init_seed);

    Video predict(const Video& z_t, const Image& endpoint, const Video& conditions, int t,
                  double gamma) const override;
    const NoiseSchedule& schedule() const override { return schedule_; }
    std::string id() const override;

    /// Raw network output (the v estimate).
    Video predict_v(const Video& z_t, const Image& endpoint, const Video& conditions, int t, double gamma) const;

    /// Mean squared v-prediction error of one sample.
    double loss(const TrainingSample& sample) const;
    /// Loss together with d loss / d parameters (same layout as parameters()).
    double loss_and_gradient(const TrainingSample& sample, std::vector<double>& gradient) const;

    const ToyArchitecture& architecture() const { return arch_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    /// Schedule the time index refers to; sigma_t is the network's time input,
    /// so trained weights remain usable at a different step count.
    void set_schedule(NoiseSchedule schedule);

    /// Little-endian float32 weights at `path`, JSON layout sidecar at `path`.json.
    void save(const std::filesystem::path& path) const;
    static ToyDenoiser load(const std::filesystem::path& path);

    struct Layer {
        std::string name;
        int out_channels;
        int in_channels;
        std::size_t weight_offset;
        std::size_t bias_offset;
    };
    const std::vector<Layer>& layers() const { return layers_; }

private:
    struct FrameCache;
    void forward_frame(const Video& z_t, const Image& endpoint, const Video& conditions, int frame, int t,
                       double gamma, FrameCache& cache, std::span<double> v_out) const;
    void backward_frame(const FrameCache& cache, std::span<const double> grad_v, double gamma,
                        std::vector<double>& gradient) const;
    void check_inputs(const Video& z_t, const Image& endpoint, const Video& conditions, int t, double gamma) const;

    ToyArchitecture arch_;
    NoiseSchedule schedule_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
};

/// Plain SGD on the v-prediction objective. Each step draws one clip, a time
/// step uniformly from 1..T and fresh noise; with `flip_augment` the clip is
/// time-reversed half of the time (endpoint becomes its last frame).
/// `on_epoch(epoch, mean_loss)` is called after every epoch when set.
TrainReport toy_train(ToyDenoiser& model, std::span<const TrainingClip> dataset, const TrainConfig& config,
                      const std::function<void(int, double)>& on_epoch = {});

/// Mean loss over a fixed set of draws (`draws_per_clip` per clip, seeded),
/// without flip augmentation. Comparable across training checkpoints.
double evaluate_toy_loss(const ToyDenoiser& model, std::span<const TrainingClip> dataset, std::uint64_t seed,
                         int draws_per_clip = 2);

inline constexpr const char* kToyWeightsFormat = "fcvg-toyweights/1";

} // namespace fcvg
