#include "geofuse/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace geofuse {

RasterStack::RasterStack(std::size_t bands, std::size_t height, std::size_t width, double fill)
    : RasterStack(bands, height, width, std::vector<double>(bands * height * width, fill)) {}

RasterStack::RasterStack(std::size_t bands, std::size_t height, std::size_t width,
                         std::vector<double> data, std::vector<std::string> band_names)
    : bands_(bands), height_(height), width_(width), data_(std::move(data)), names_(std::move(band_names)) {
    if (bands == 0 || height == 0 || width == 0) {
        throw std::invalid_argument("raster dimensions must be positive");
    }
    if (data_.size() != bands * height * width) {
        throw std::invalid_argument("raster data length " + std::to_string(data_.size()) +
                                    " does not equal bands*height*width = " +
                                    std::to_string(bands * height * width));
    }
    if (names_.empty()) {
        for (std::size_t b = 0; b < bands; ++b) names_.push_back("band" + std::to_string(b + 1));
    }
    if (names_.size() != bands) throw std::invalid_argument("one band name per band required");
}

std::span<double> RasterStack::band(std::size_t b) {
    if (b >= bands_) throw std::out_of_range("band index out of range");
    return std::span<double>(data_).subspan(b * pixels(), pixels());
}

std::span<const double> RasterStack::band(std::size_t b) const {
    if (b >= bands_) throw std::out_of_range("band index out of range");
    return std::span<const double>(data_).subspan(b * pixels(), pixels());
}

std::pair<double, double> RasterStack::band_range(std::size_t b) const {
    const auto values = band(b);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

bool RasterStack::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool RasterStack::same_geometry(const RasterStack& o) const noexcept {
    return bands_ == o.bands_ && height_ == o.height_ && width_ == o.width_;
}

// ---------------------------------------------------------------------------
// Enhancement

std::vector<double> histogram_equalize(std::span<const double> band, std::size_t levels) {
    if (levels < 2) throw std::invalid_argument("histogram_equalize needs at least 2 levels");
    std::vector<double> out(band.begin(), band.end());
    if (band.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(band.begin(), band.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return out;

    const double top = static_cast<double>(levels - 1);
    std::vector<std::size_t> bins(band.size());
    std::vector<std::size_t> hist(levels, 0);
    for (std::size_t i = 0; i < band.size(); ++i) {
        const double scaled = (band[i] - lo) / (hi - lo) * top;
        bins[i] = std::min(levels - 1, static_cast<std::size_t>(std::floor(scaled + 0.5)));
        ++hist[bins[i]];
    }
    std::vector<std::size_t> cdf(levels);
    std::partial_sum(hist.begin(), hist.end(), cdf.begin());
    const std::size_t cdf_min = *std::find_if(cdf.begin(), cdf.end(), [](std::size_t c) { return c > 0; });
    const std::size_t total = band.size();
    if (total == cdf_min) return out;  // every value in one bin

    for (std::size_t i = 0; i < band.size(); ++i) {
        const double h = std::round(static_cast<double>(cdf[bins[i]] - cdf_min) /
                                    static_cast<double>(total - cdf_min) * top);
        out[i] = lo + h / top * (hi - lo);
    }
    return out;
}

std::vector<double> contrast_stretch(std::span<const double> band) {
    std::vector<double> out(band.size(), 0.0);
    if (band.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(band.begin(), band.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < band.size(); ++i) out[i] = std::clamp((band[i] - lo) / range, 0.0, 1.0);
    return out;
}

RasterStack equalize_stack(const RasterStack& stack, std::size_t levels) {
    RasterStack out = stack;
    for (std::size_t b = 0; b < stack.bands(); ++b) {
        const auto eq = histogram_equalize(stack.band(b), levels);
        std::copy(eq.begin(), eq.end(), out.band(b).begin());
    }
    return out;
}

RasterStack stretch_stack(const RasterStack& stack) {
    RasterStack out = stack;
    for (std::size_t b = 0; b < stack.bands(); ++b) {
        const auto st = contrast_stretch(stack.band(b));
        std::copy(st.begin(), st.end(), out.band(b).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// PCA

DimensionalityCapExceeded::DimensionalityCapExceeded(std::size_t requested_, std::size_t cap_)
    : std::invalid_argument("PCA retain " + std::to_string(requested_) +
                            " exceeds the maximum allowable dimensionality " + std::to_string(cap_)),
      requested(requested_),
      cap(cap_) {}

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, double tolerance,
                            std::size_t max_sweeps) {
    if (a.size() != n * n) throw std::invalid_argument("jacobi_eigen: matrix is not n x n");
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    double scale = 0.0;
    for (double x : a) scale += x * x;
    scale = std::sqrt(scale);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (std::sqrt(off) <= tolerance * std::max(scale, 1e-300)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = a[q * n + p] = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = a[p * n + k] = c * akp - s * akq;
                    a[k * n + q] = a[q * n + k] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
    SymmetricEigen out;
    for (std::size_t k : order) {
        out.values.push_back(a[k * n + k]);
        std::vector<double> vec(n);
        for (std::size_t i = 0; i < n; ++i) vec[i] = v[i * n + k];
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

std::vector<double> band_covariance(const RasterStack& stack, std::vector<double>* mean_out) {
    const std::size_t nb = stack.bands();
    const std::size_t np = stack.pixels();
    std::vector<double> mean(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const auto band = stack.band(b);
        mean[b] = std::accumulate(band.begin(), band.end(), 0.0) / static_cast<double>(np);
    }
    std::vector<double> cov(nb * nb, 0.0);
    for (std::size_t x = 0; x < nb; ++x) {
        const auto bx = stack.band(x);
        for (std::size_t y = x; y < nb; ++y) {
            const auto by = stack.band(y);
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p) s += (bx[p] - mean[x]) * (by[p] - mean[y]);
            cov[x * nb + y] = cov[y * nb + x] = s / static_cast<double>(np);
        }
    }
    if (mean_out) *mean_out = std::move(mean);
    return cov;
}

PcaModel pca_fit(const RasterStack& stack, std::size_t retain,
                 std::optional<std::size_t> max_dimensions) {
    if (retain == 0) throw std::invalid_argument("PCA must retain at least one component");
    if (retain > stack.bands()) {
        throw std::invalid_argument("PCA retain " + std::to_string(retain) + " exceeds band count " +
                                    std::to_string(stack.bands()));
    }
    if (max_dimensions && retain > *max_dimensions) {
        throw DimensionalityCapExceeded(retain, *max_dimensions);
    }
    PcaModel model;
    const std::size_t nb = stack.bands();
    const SymmetricEigen eig = jacobi_eigen(band_covariance(stack, &model.mean), nb);

    double total = 0.0;
    for (double ev : eig.values) total += std::max(ev, 0.0);
    for (std::size_t k = 0; k < retain; ++k) {
        std::vector<double> comp = eig.vectors[k];
        const auto peak = std::max_element(comp.begin(), comp.end(),
                                           [](double x, double y) { return std::abs(x) < std::abs(y); });
        if (*peak < 0.0)
            for (double& c : comp) c = -c;
        const double ev = std::max(eig.values[k], 0.0);
        model.components.push_back(std::move(comp));
        model.eigenvalues.push_back(ev);
        model.explained_ratio.push_back(total > 0.0 ? ev / total : 0.0);
    }
    return model;
}

RasterStack pca_transform(const RasterStack& stack, const PcaModel& model) {
    if (stack.bands() != model.bands()) {
        throw std::invalid_argument("PCA model fitted on " + std::to_string(model.bands()) +
                                    " bands, stack has " + std::to_string(stack.bands()));
    }
    const std::size_t np = stack.pixels();
    std::vector<std::string> names;
    for (std::size_t k = 0; k < model.retained(); ++k) names.push_back("PC" + std::to_string(k + 1));
    RasterStack out(model.retained(), stack.height(), stack.width(),
                    std::vector<double>(model.retained() * np, 0.0), std::move(names));
    for (std::size_t k = 0; k < model.retained(); ++k) {
        auto dst = out.band(k);
        for (std::size_t b = 0; b < model.bands(); ++b) {
            const double w = model.components[k][b];
            const double mu = model.mean[b];
            const auto src = stack.band(b);
            for (std::size_t p = 0; p < np; ++p) dst[p] += w * (src[p] - mu);
        }
    }
    return out;
}

RasterStack pca_inverse(const RasterStack& scores, const PcaModel& model) {
    if (scores.bands() != model.retained()) {
        throw std::invalid_argument("score stack band count does not match retained components");
    }
    const std::size_t np = scores.pixels();
    RasterStack out(model.bands(), scores.height(), scores.width());
    for (std::size_t b = 0; b < model.bands(); ++b) {
        auto dst = out.band(b);
        std::fill(dst.begin(), dst.end(), model.mean[b]);
        for (std::size_t k = 0; k < model.retained(); ++k) {
            const double w = model.components[k][b];
            const auto src = scores.band(k);
            for (std::size_t p = 0; p < np; ++p) dst[p] += w * src[p];
        }
    }
    return out;
}

double pca_reconstruction_error(const RasterStack& stack, const PcaModel& model) {
    const RasterStack recon = pca_inverse(pca_transform(stack, model), model);
    double s = 0.0;
    const auto a = stack.values();
    const auto b = recon.values();
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Fusion

RasterStack pixel_fuse(std::span<const RasterStack> stacks, std::span<const double> weights) {
    if (stacks.empty()) throw std::invalid_argument("pixel_fuse needs at least one stack");
    if (weights.size() != stacks.size()) {
        throw std::invalid_argument("pixel_fuse needs one weight per stack");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("pixel_fuse weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("pixel_fuse weights sum to " + std::to_string(sum) + ", not 1");
    }
    for (const auto& s : stacks) {
        if (!s.same_geometry(stacks.front())) {
            throw std::invalid_argument("pixel_fuse stacks differ in bands/height/width");
        }
    }
    RasterStack out(stacks.front().bands(), stacks.front().height(), stacks.front().width(),
                    std::vector<double>(stacks.front().values().size(), 0.0),
                    stacks.front().band_names());
    auto dst = out.values();
    for (std::size_t s = 0; s < stacks.size(); ++s) {
        const auto src = stacks[s].values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weights[s] * src[i];
    }
    return out;
}

RasterStack concat_bands(std::span<const RasterStack> stacks) {
    if (stacks.empty()) throw std::invalid_argument("concat_bands needs at least one stack");
    std::vector<double> data;
    std::vector<std::string> names;
    std::size_t bands = 0;
    for (const auto& s : stacks) {
        if (s.height() != stacks.front().height() || s.width() != stacks.front().width()) {
            throw std::invalid_argument("concat_bands stacks differ in height/width");
        }
        data.insert(data.end(), s.values().begin(), s.values().end());
        names.insert(names.end(), s.band_names().begin(), s.band_names().end());
        bands += s.bands();
    }
    return RasterStack(bands, stacks.front().height(), stacks.front().width(), std::move(data),
                       std::move(names));
}

// ---------------------------------------------------------------------------
// Codec

BadMagicError::BadMagicError(std::size_t offset_)
    : RasterFormatError("bad magic bytes at offset " + std::to_string(offset_) +
                        " (expected \"MSRS\")"),
      offset(offset_) {}

TruncatedError::TruncatedError(std::size_t needed, std::size_t available)
    : RasterFormatError("truncated raster: need " + std::to_string(needed) + " bytes, have " +
                        std::to_string(available)) {}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'R', 'S'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 4;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw TruncatedError(pos_ + n, bytes_.size());
    }
    std::uint16_t u16() {
        need(2);
        const auto b = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
        pos_ += 2;
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        need(4);
        const auto b = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
        pos_ += 4;
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

struct Header {
    std::uint32_t bands;
    std::uint32_t height;
    std::uint32_t width;
    std::uint64_t values;
};

std::string header_bytes(std::uint32_t bands, std::uint32_t height, std::uint32_t width) {
    std::string out(kMagic, 4);
    put_u16(out, kRasterFormatVersion);
    put_u32(out, bands);
    put_u32(out, height);
    put_u32(out, width);
    return out;
}

std::uint32_t checked_dim(std::size_t d) {
    if (d == 0 || d > 0xffffffffULL) throw DimensionOverflowError("raster dimension does not fit u32");
    return static_cast<std::uint32_t>(d);
}

Header read_header(Reader& r) {
    const std::string_view magic = r.take(std::min<std::size_t>(4, r.remaining()));
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= magic.size()) throw TruncatedError(4, magic.size());
        if (magic[i] != kMagic[i]) throw BadMagicError(i);
    }
    const std::uint16_t version = r.u16();
    if (version != kRasterFormatVersion) {
        throw RasterFormatError("unsupported raster format version " + std::to_string(version));
    }
    Header h{r.u32(), r.u32(), r.u32(), 0};
    if (h.bands == 0 || h.height == 0 || h.width == 0) {
        throw RasterFormatError("raster header declares a zero dimension");
    }
    const std::uint64_t plane = std::uint64_t{h.height} * h.width;  // cannot overflow
    if (plane > kMaxRasterValues || plane * h.bands > kMaxRasterValues) {
        throw DimensionOverflowError("raster header declares " + std::to_string(h.bands) + "x" +
                                     std::to_string(h.height) + "x" + std::to_string(h.width) +
                                     " values, above the codec limit");
    }
    h.values = plane * h.bands;
    return h;
}

void put_names(std::string& out, const std::vector<std::string>& names) {
    if (names.size() > 0xffff) throw DimensionOverflowError("too many band names");
    put_u16(out, static_cast<std::uint16_t>(names.size()));
    for (const auto& n : names) {
        if (n.size() > 0xffff) throw DimensionOverflowError("band name longer than 65535 bytes");
        put_u16(out, static_cast<std::uint16_t>(n.size()));
        out += n;
    }
}

std::vector<std::string> read_names(Reader& r) {
    const std::uint16_t count = r.u16();
    std::vector<std::string> names;
    for (std::uint16_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.u16();
        names.emplace_back(r.take(len));
    }
    if (r.remaining() != 0) {
        throw RasterFormatError(std::to_string(r.remaining()) + " trailing bytes after name table");
    }
    return names;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spill(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string encode_raster(const RasterStack& stack) {
    std::string out = header_bytes(checked_dim(stack.bands()), checked_dim(stack.height()),
                                   checked_dim(stack.width()));
    if (stack.values().size() > kMaxRasterValues) throw DimensionOverflowError("raster too large");
    out.reserve(out.size() + 4 * stack.values().size() + 64);
    for (double v : stack.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    put_names(out, stack.band_names());
    return out;
}

RasterStack decode_raster(std::string_view bytes) {
    Reader r(bytes);
    const Header h = read_header(r);
    r.need(h.values * 4);
    std::vector<double> data(h.values);
    for (auto& v : data) v = static_cast<double>(std::bit_cast<float>(r.u32()));
    std::vector<std::string> names = read_names(r);
    if (!names.empty() && names.size() != h.bands) {
        throw RasterFormatError("name table has " + std::to_string(names.size()) + " entries for " +
                                std::to_string(h.bands) + " bands");
    }
    return RasterStack(h.bands, h.height, h.width, std::move(data), std::move(names));
}

std::string encode_labels(const LabelImage& labels, const std::string& name) {
    std::string out = header_bytes(1, checked_dim(labels.height), checked_dim(labels.width));
    for (std::uint16_t v : labels.labels) put_u16(out, v);
    put_names(out, {name});
    return out;
}

LabelImage decode_labels(std::string_view bytes) {
    Reader r(bytes);
    const Header h = read_header(r);
    if (h.bands != 1) throw RasterFormatError("label image must have exactly one band");
    r.need(h.values * 2);
    LabelImage img(h.height, h.width);
    for (auto& v : img.labels) v = r.u16();
    read_names(r);
    return img;
}

void write_raster(const RasterStack& stack, const std::filesystem::path& path) {
    spill(path, encode_raster(stack));
}

RasterStack read_raster(const std::filesystem::path& path) { return decode_raster(slurp(path)); }

void write_labels(const LabelImage& labels, const std::filesystem::path& path) {
    spill(path, encode_labels(labels));
}

LabelImage read_labels(const std::filesystem::path& path) { return decode_labels(slurp(path)); }

}  // namespace geofuse
