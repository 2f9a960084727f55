#pragma once
// Core domain types: single-channel images in [-1, 1], semantic label maps,
// and the three-domain label with its one-hot codec.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uslab/tensor.hpp"

namespace uslab {

enum class DomainLabel : int { kSim = 0, kReal = 1, kSeg = 2 };

inline constexpr int kNumDomains = 3;

inline std::array<float, 3> one_hot(DomainLabel l) {
    std::array<float, 3> v{0.0f, 0.0f, 0.0f};
    v[static_cast<size_t>(static_cast<int>(l))] = 1.0f;
    return v;
}

inline const char* domain_name(DomainLabel l) {
    switch (l) {
        case DomainLabel::kSim: return "sim";
        case DomainLabel::kReal: return "real";
        case DomainLabel::kSeg: return "seg";
    }
    return "?";
}

DomainLabel domain_from_string(const std::string& s);

// H x W raster with values in [-1, 1]. Constructing from out-of-range data
// throws; nothing is silently clamped.
class Image {
  public:
    Image() = default;
    Image(int h, int w) : h_(h), w_(w), data_(static_cast<size_t>(h) * w) {
        check(h >= 16 && w >= 16, "Image: size below 16x16 minimum");
    }
    Image(int h, int w, std::vector<float> data);

    int height() const { return h_; }
    int width() const { return w_; }
    const std::vector<float>& values() const { return data_; }
    float at(int y, int x) const {
        return data_[static_cast<size_t>(y) * w_ + x];
    }
    void set(int y, int x, float v);

    // Unchecked bulk mutation is intentionally absent; renderers build a
    // float buffer and use the validating constructor.
    Tensor<float> to_tensor() const;  // [1, H, W]
    static Image from_tensor(const Tensor<float>& t, bool clamp = false);

  private:
    int h_ = 0, w_ = 0;
    std::vector<float> data_;
};

// H x W integer class labels; 0 is background.
class SemanticMap {
  public:
    SemanticMap() = default;
    SemanticMap(int h, int w, int num_classes)
        : h_(h), w_(w), num_classes_(num_classes),
          labels_(static_cast<size_t>(h) * w, 0) {
        check(num_classes >= 2, "SemanticMap: need at least 2 classes");
    }
    SemanticMap(int h, int w, int num_classes, std::vector<uint8_t> labels);

    int height() const { return h_; }
    int width() const { return w_; }
    int num_classes() const { return num_classes_; }
    uint8_t at(int y, int x) const {
        return labels_[static_cast<size_t>(y) * w_ + x];
    }
    void set(int y, int x, uint8_t v);
    const std::vector<uint8_t>& labels() const { return labels_; }

    // Encodes labels as a grayscale image: label k maps to
    // 2*k/(num_classes-1) - 1. This is how segmentation maps enter the
    // generator.
    Image to_image() const;

  private:
    int h_ = 0, w_ = 0;
    int num_classes_ = 0;
    std::vector<uint8_t> labels_;
};

// 8-bit PNG IO. Images map [0,255] <-> [-1,1] linearly; semantic maps are
// written as indexed PNG with the label palette.
void write_png_gray(const std::string& path, const Image& img);
Image read_png_gray(const std::string& path);
void write_png_indexed(const std::string& path, const SemanticMap& map);
SemanticMap read_png_indexed(const std::string& path, int num_classes);
// Reads either kind: indexed PNGs decode via SemanticMap::to_image.
Image read_png_auto(const std::string& path, int num_classes);
bool png_is_indexed(const std::string& path);

inline float gray8_to_value(uint8_t g) {
    return static_cast<float>(g) / 127.5f - 1.0f;
}
inline uint8_t value_to_gray8(float v) {
    const float g = (v + 1.0f) * 127.5f;
    const int r = static_cast<int>(g + 0.5f);
    return static_cast<uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

}  // namespace uslab
