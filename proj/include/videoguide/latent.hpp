#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace videoguide {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (frames, channels, height, width)
struct LatentShape {
    int frames = 8;
    int channels = 1;
    int height = 4;
    int width = 4;

    std::size_t frame_size() const { return std::size_t(channels) * height * width; }
    std::size_t size() const { return std::size_t(frames) * frame_size(); }
    std::string str() const;

    friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

// Dense real video tensor, row-major over (frame, channel, row, column).
class VideoLatent {
public:
    VideoLatent() = default;
    explicit VideoLatent(LatentShape shape, double fill = 0.0);
    VideoLatent(LatentShape shape, std::vector<double> data);

    const LatentShape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int frame, int channel, int row, int col);
    double at(int frame, int channel, int row, int col) const;

    std::size_t index(int frame, int channel, int row, int col) const {
        return ((std::size_t(frame) * shape_.channels + channel) * shape_.height + row) * shape_.width + col;
    }

    std::span<double> frame(int n) { return {data_.data() + n * shape_.frame_size(), shape_.frame_size()}; }
    std::span<const double> frame(int n) const {
        return {data_.data() + n * shape_.frame_size(), shape_.frame_size()};
    }

    bool all_finite() const;
    double squared_norm() const;

    VideoLatent& operator+=(const VideoLatent& other);
    VideoLatent& operator-=(const VideoLatent& other);
    VideoLatent& operator*=(double s);

    friend VideoLatent operator+(VideoLatent a, const VideoLatent& b) { return a += b; }
    friend VideoLatent operator-(VideoLatent a, const VideoLatent& b) { return a -= b; }
    friend VideoLatent operator*(VideoLatent a, double s) { return a *= s; }
    friend VideoLatent operator*(double s, VideoLatent a) { return a *= s; }

    friend bool operator==(const VideoLatent&, const VideoLatent&) = default;

private:
    LatentShape shape_{};
    std::vector<double> data_;
};

void require_same_shape(const VideoLatent& a, const VideoLatent& b, const char* what);

// a·x + b·y, elementwise
VideoLatent linear_combination(double a, const VideoLatent& x, double b, const VideoLatent& y);

}  // namespace videoguide
