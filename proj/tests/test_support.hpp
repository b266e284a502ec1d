#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "fcvg/rng.hpp"
#include "fcvg/tensor.hpp"

namespace fcvg::testing {

inline Video random_video(Rng& rng, int n, int c, int h, int w, double scale = 1.0) {
    Video v(n, c, h, w);
    for (double& x : v.values()) x = scale * rng.normal();
    return v;
}

inline Image random_image(Rng& rng, int c, int h, int w, double lo = 0.0, double hi = 1.0) {
    Image img(c, h, w);
    for (double& x : img.values()) x = rng.uniform(lo, hi);
    return img;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fcvg_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace fcvg::testing
