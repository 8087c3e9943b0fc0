// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "fgdm/image.hpp"

namespace testing {

inline fgdm::ImageGrid random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    fgdm::Rng rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    fgdm::ImageGrid img(h, w);
    for (double& v : img.values()) v = u(rng);
    return img;
}

/// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fgdm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
