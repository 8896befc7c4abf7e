#include "videoguide/latent.hpp"

#include <cmath>

namespace videoguide {

std::string LatentShape::str() const {
    return std::to_string(frames) + "x" + std::to_string(channels) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
}

VideoLatent::VideoLatent(LatentShape shape, double fill) : shape_(shape) {
    if (shape.frames < 1 || shape.channels < 1 || shape.height < 1 || shape.width < 1)
        throw ShapeError("latent shape must be positive, got " + shape.str());
    data_.assign(shape.size(), fill);
}

VideoLatent::VideoLatent(LatentShape shape, std::vector<double> data) : VideoLatent(shape) {
    if (data.size() != shape.size())
        throw ShapeError("latent data has " + std::to_string(data.size()) + " values, shape " + shape.str() +
                         " needs " + std::to_string(shape.size()));
    data_ = std::move(data);
}

double& VideoLatent::at(int frame, int channel, int row, int col) { return data_.at(index(frame, channel, row, col)); }

double VideoLatent::at(int frame, int channel, int row, int col) const {
    return data_.at(index(frame, channel, row, col));
}

bool VideoLatent::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double VideoLatent::squared_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

VideoLatent& VideoLatent::operator+=(const VideoLatent& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

VideoLatent& VideoLatent::operator-=(const VideoLatent& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

VideoLatent& VideoLatent::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

void require_same_shape(const VideoLatent& a, const VideoLatent& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

VideoLatent linear_combination(double a, const VideoLatent& x, double b, const VideoLatent& y) {
    require_same_shape(x, y, "linear_combination");
    VideoLatent out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

}  // namespace videoguide
