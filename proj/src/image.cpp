#include "uslab/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace uslab {

DomainLabel domain_from_string(const std::string& s) {
    if (s == "sim") return DomainLabel::kSim;
    if (s == "real") return DomainLabel::kReal;
    if (s == "seg") return DomainLabel::kSeg;
    throw std::invalid_argument("unknown domain label: " + s);
}

Image::Image(int h, int w, std::vector<float> data)
    : h_(h), w_(w), data_(std::move(data)) {
    check(h >= 16 && w >= 16, "Image: size below 16x16 minimum");
    check(data_.size() == static_cast<size_t>(h) * w, "Image: size mismatch");
    for (float v : data_)
        check(v >= -1.0f && v <= 1.0f, "Image: value outside [-1, 1]");
}

void Image::set(int y, int x, float v) {
    check(v >= -1.0f && v <= 1.0f, "Image: value outside [-1, 1]");
    data_[static_cast<size_t>(y) * w_ + x] = v;
}

Tensor<float> Image::to_tensor() const {
    Tensor<float> t({1, h_, w_});
    std::copy(data_.begin(), data_.end(), t.data());
    return t;
}

Image Image::from_tensor(const Tensor<float>& t, bool clamp) {
    check(t.ndim() == 3 && t.dim(0) == 1, "from_tensor: want [1,H,W]");
    std::vector<float> v(t.data(), t.data() + t.numel());
    if (clamp)
        for (float& x : v) x = x < -1.0f ? -1.0f : (x > 1.0f ? 1.0f : x);
    return Image(t.dim(1), t.dim(2), std::move(v));
}

SemanticMap::SemanticMap(int h, int w, int num_classes,
                         std::vector<uint8_t> labels)
    : h_(h), w_(w), num_classes_(num_classes), labels_(std::move(labels)) {
    check(num_classes >= 2, "SemanticMap: need at least 2 classes");
    check(labels_.size() == static_cast<size_t>(h) * w,
          "SemanticMap: size mismatch");
    for (uint8_t l : labels_)
        check(l < num_classes_, "SemanticMap: label out of range");
}

void SemanticMap::set(int y, int x, uint8_t v) {
    check(v < num_classes_, "SemanticMap: label out of range");
    labels_[static_cast<size_t>(y) * w_ + x] = v;
}

Image SemanticMap::to_image() const {
    std::vector<float> v(labels_.size());
    const float denom = static_cast<float>(num_classes_ - 1);
    for (size_t i = 0; i < labels_.size(); ++i)
        v[i] = 2.0f * static_cast<float>(labels_[i]) / denom - 1.0f;
    return Image(h_, w_, std::move(v));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error(path + ": " + what);
}

void write_png_8bit(const std::string& path, int h, int w,
                    const uint8_t* rows, bool indexed, int num_classes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for writing");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "libpng write error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w),
                 static_cast<png_uint_32>(h), 8,
                 indexed ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> palette;
    if (indexed) {
        // Evenly spaced gray palette so label maps are viewable directly.
        palette.resize(static_cast<size_t>(num_classes));
        for (int i = 0; i < num_classes; ++i) {
            const uint8_t g = static_cast<uint8_t>(
                (255 * i) / (num_classes - 1 > 0 ? num_classes - 1 : 1));
            palette[static_cast<size_t>(i)] = {g, g, g};
        }
        png_set_PLTE(png, info, palette.data(), num_classes);
    }
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        row_ptrs[static_cast<size_t>(y)] =
            const_cast<png_bytep>(rows + static_cast<size_t>(y) * w);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct PngData {
    int h = 0, w = 0;
    bool indexed = false;
    std::vector<uint8_t> pixels;
};

PngData read_png_8bit(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                               nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "libpng read error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    PngData out;
    out.w = static_cast<int>(png_get_image_width(png, info));
    out.h = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    out.indexed = color == PNG_COLOR_TYPE_PALETTE;
    if (depth == 16) png_set_strip_16(png);
    if (depth < 8) png_set_packing(png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA || color == PNG_COLOR_TYPE_RGBA)
        png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGBA)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    out.pixels.resize(static_cast<size_t>(out.h) * out.w);
    std::vector<png_bytep> row_ptrs(static_cast<size_t>(out.h));
    for (int y = 0; y < out.h; ++y)
        row_ptrs[static_cast<size_t>(y)] =
            out.pixels.data() + static_cast<size_t>(y) * out.w;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

void write_png_gray(const std::string& path, const Image& img) {
    std::vector<uint8_t> rows(static_cast<size_t>(img.height()) *
                              img.width());
    for (size_t i = 0; i < rows.size(); ++i)
        rows[i] = value_to_gray8(img.values()[i]);
    write_png_8bit(path, img.height(), img.width(), rows.data(), false, 0);
}

Image read_png_gray(const std::string& path) {
    PngData d = read_png_8bit(path);
    std::vector<float> v(d.pixels.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = gray8_to_value(d.pixels[i]);
    return Image(d.h, d.w, std::move(v));
}

void write_png_indexed(const std::string& path, const SemanticMap& map) {
    write_png_8bit(path, map.height(), map.width(), map.labels().data(), true,
                   map.num_classes());
}

SemanticMap read_png_indexed(const std::string& path, int num_classes) {
    PngData d = read_png_8bit(path);
    if (!d.indexed) fail(path, "expected an indexed PNG");
    return SemanticMap(d.h, d.w, num_classes, std::move(d.pixels));
}

bool png_is_indexed(const std::string& path) {
    return read_png_8bit(path).indexed;
}

Image read_png_auto(const std::string& path, int num_classes) {
    PngData d = read_png_8bit(path);
    if (d.indexed)
        return SemanticMap(d.h, d.w, num_classes, std::move(d.pixels))
            .to_image();
    std::vector<float> v(d.pixels.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = gray8_to_value(d.pixels[i]);
    return Image(d.h, d.w, std::move(v));
}

}  // namespace uslab
