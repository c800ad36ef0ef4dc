#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tsgm {

// Row-major single-channel image.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width < 0 || height < 0)
            throw std::invalid_argument("Image: negative dimensions");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return data_.size(); }

    T& operator()(int x, int y) {
        assert(contains(x, y));
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    const T& operator()(int x, int y) const {
        assert(contains(x, y));
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool contains(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }
    template <typename U>
    bool same_size(const Image<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;

}  // namespace tsgm
