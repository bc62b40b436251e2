#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "rallypose/ingest.hpp"
#include "rallypose/nn/tensor.hpp"
#include "rallypose/random.hpp"

namespace rallypose::testutil {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("rallypose_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Plausible standing skeleton with random limb offsets, all joints visible.
inline KeypointFrame random_pose(std::mt19937_64& rng, std::int64_t frame = 0, std::int64_t player = 0) {
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    static constexpr double base[kNumJoints][2] = {
        {0, -150}, {-5, -155}, {5, -155}, {-10, -150}, {10, -150}, {-20, -120}, {20, -120}, {-30, -90}, {30, -90},
        {-35, -60}, {35, -60}, {-12, -60}, {12, -60}, {-14, -30}, {14, -30}, {-15, 0}, {15, 0}};
    KeypointFrame kp;
    kp.frame = frame;
    kp.player_id = player;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        kp.keypoints[j] = {snap_coordinate(600 + base[j][0] + u(rng)), snap_coordinate(400 + base[j][1] + u(rng)),
                           0.9};
    }
    return kp;
}

inline nn::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
    nn::Tensor t(std::move(shape));
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : t.values()) {
        v = n(rng);
    }
    return t;
}

} // namespace rallypose::testutil
