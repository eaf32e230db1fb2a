#include "kftam/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

#include "kftam/errors.hpp"
#include "kftam/text.hpp"

namespace kftam {

namespace {

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) raise(ErrorKind::kIoError, "cannot open " + path.string());
  return f;
}

// libpng reports errors by longjmp; nothing with a destructor lives between
// setjmp and the end of the guarded block. The message goes into the
// caller's error string instead of stderr.
void on_png_error(png_structp png, png_const_charp message) {
  if (auto* sink = static_cast<std::string*>(png_get_error_ptr(png))) *sink = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

bool read_png_rows(std::FILE* f, RawPng& out, std::vector<std::uint8_t>& buffer, std::string& error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
  if (png == nullptr) {
    error = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt PNG" + (error.empty() ? std::string() : ": " + error);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * static_cast<std::size_t>(out.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng read_png(const std::filesystem::path& path) {
  const FilePtr f = open_file(path, "rb");
  RawPng out;
  std::vector<std::uint8_t> buffer;
  std::string error;
  if (!read_png_rows(f.get(), out, buffer, error)) raise(ErrorKind::kIoError, path.string() + ": " + error);
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    std::memcpy(out.samples.data(), buffer.data(), n * 2);
  } else {
    std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(n), out.samples.begin());
  }
  return out;
}

bool write_png_rows(std::FILE* f, int width, int height, int channels, int bit_depth, const std::uint8_t* data,
                    std::string& error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
  if (png == nullptr) {
    error = "png_create_write_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = "PNG encoding failed" + (error.empty() ? std::string() : ": " + error);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) png_write_row(png, data + row_bytes * y);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               const std::uint8_t* data) {
  const FilePtr f = open_file(path, "wb");
  std::string error;
  if (!write_png_rows(f.get(), width, height, channels, bit_depth, data, error)) {
    raise(ErrorKind::kIoError, path.string() + ": " + error);
  }
}

}  // namespace

Image read_png_image(const std::filesystem::path& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1 && raw.channels != 3) raise(ErrorKind::kIoError, path.string() + ": unsupported channels");
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  Image img(raw.width, raw.height, raw.channels);
  std::size_t i = 0;
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < raw.channels; ++c) img.set(x, y, raw.samples[i++] / scale, c);
  return img;
}

void write_png_image(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> data(image.data().size());
  std::transform(image.data().begin(), image.data().end(), data.begin(),
                 [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); });
  write_png(path, image.width(), image.height(), image.channels(), 8, data.data());
}

DepthMap read_depth_png(const std::filesystem::path& path, double scale) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1 || raw.bit_depth != 16) raise(ErrorKind::kIoError, path.string() + ": not a 16-bit gray PNG");
  DepthMap d(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::uint16_t v = raw.samples[static_cast<std::size_t>(y) * raw.width + x];
      if (v != 0) d.set(x, y, v / scale);
    }
  }
  return d;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale) {
  std::vector<std::uint16_t> data(depth.pixel_count(), 0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double v = std::clamp(std::round(depth.at(x, y) * scale), 1.0, 65535.0);
      data[static_cast<std::size_t>(y) * depth.width() + x] = static_cast<std::uint16_t>(v);
    }
  }
  write_png(path, depth.width(), depth.height(), 1, 16, reinterpret_cast<const std::uint8_t*>(data.data()));
}

void write_pfm(const std::filesystem::path& path, const MaskedMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::kIoError, "cannot write " + path.string());
  out << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
  // PFM rows run bottom to top.
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      const float v = map.valid(x, y) ? static_cast<float>(map.at(x, y)) : std::numeric_limits<float>::quiet_NaN();
      auto bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char b[4];
      std::memcpy(b, &bits, 4);
      out.write(b, 4);
    }
  }
  if (!out) raise(ErrorKind::kIoError, "write failed: " + path.string());
}

MaskedMap read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::kIoError, "cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  in.get();
  if (!in || magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0) {
    raise(ErrorKind::kIoError, path.string() + ": not a single-channel PFM");
  }
  const bool little = scale < 0.0;
  MaskedMap map(width, height);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      char b[4];
      if (!in.read(b, 4)) raise(ErrorKind::kIoError, path.string() + ": truncated PFM");
      std::uint32_t bits;
      std::memcpy(&bits, b, 4);
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      map.set(x, y, static_cast<double>(std::bit_cast<float>(bits)));
    }
  }
  return map;
}

namespace {

std::vector<std::vector<std::string>> read_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kMissingIndexFile, path.string());
  std::vector<std::vector<std::string>> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().starts_with('#')) continue;
    lines.emplace_back(fields.begin(), fields.end());
    lines.back().insert(lines.back().begin(), std::to_string(number));
  }
  return lines;
}

struct IndexEntry {
  double timestamp;
  std::filesystem::path file;
};

std::vector<IndexEntry> read_file_index(const std::filesystem::path& path) {
  std::vector<IndexEntry> entries;
  for (const auto& fields : read_index(path)) {
    const int line = std::stoi(fields[0]);
    if (fields.size() != 3) {
      throw MalformedLineError(path.string(), line, "expected 'timestamp filename'");
    }
    double t = 0.0;
    if (!parse_double(fields[1], t)) throw MalformedLineError(path.string(), line, "bad timestamp '" + fields[1] + "'");
    entries.push_back({t, path.parent_path() / fields[2]});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return entries;
}

// Nearest entry within the association gap.
template <typename T, typename Time>
const T* associate(const std::vector<T>& sorted, double t, Time time_of) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t,
                                   [&](const T& e, double v) { return time_of(e) < v; });
  const T* best = nullptr;
  double gap = std::numeric_limits<double>::infinity();
  if (it != sorted.end()) {
    best = &*it;
    gap = time_of(*it) - t;
  }
  if (it != sorted.begin() && t - time_of(*(it - 1)) <= gap) {
    best = &*(it - 1);
    gap = t - time_of(*(it - 1));
  }
  return gap <= kAssociationGap + 1e-12 ? best : nullptr;
}

}  // namespace

CameraIntrinsics read_camera_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kMissingIndexFile, path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto f = split_fields(line);
    if (f.empty() || f.front().starts_with('#')) continue;
    if (f.size() != 6) throw MalformedLineError(path.string(), number, "expected 'fx fy cx cy width height'");
    CameraIntrinsics k;
    long w = 0;
    long h = 0;
    if (!parse_double(f[0], k.fx) || !parse_double(f[1], k.fy) || !parse_double(f[2], k.cx) ||
        !parse_double(f[3], k.cy) || !parse_int(f[4], w) || !parse_int(f[5], h)) {
      throw MalformedLineError(path.string(), number, "non-numeric field");
    }
    k.width = static_cast<int>(w);
    k.height = static_cast<int>(h);
    k.validate();
    return k;
  }
  throw MalformedLineError(path.string(), number, "no camera line");
}

void write_camera_file(const std::filesystem::path& path, const CameraIntrinsics& k) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::kIoError, "cannot write " + path.string());
  out << "# fx fy cx cy width height\n"
      << format_double(k.fx) << ' ' << format_double(k.fy) << ' ' << format_double(k.cx) << ' '
      << format_double(k.cy) << ' ' << k.width << ' ' << k.height << '\n';
}

CameraIntrinsics default_tum_intrinsics(int width, int height) {
  const double sx = width / 640.0;
  const double sy = height / 480.0;
  return {525.0 * sx, 525.0 * sy, (319.5 + 0.5) * sx - 0.5, (239.5 + 0.5) * sy - 0.5, width, height};
}

DepthMap TumFrame::load_depth() const {
  if (!depth) raise(ErrorKind::kInvalidArgument, "frame at " + format_double(timestamp) + " has no depth");
  return read_depth_png(*depth);
}

TumSequence load_tum_sequence(const std::filesystem::path& dir) {
  TumSequence seq;
  seq.root = dir;
  const auto rgb = read_file_index(dir / "rgb.txt");
  std::optional<std::vector<IndexEntry>> depth;
  if (std::filesystem::exists(dir / "depth.txt")) depth = read_file_index(dir / "depth.txt");
  if (std::filesystem::exists(dir / "groundtruth.txt")) {
    Trajectory gt = read_trajectory(dir / "groundtruth.txt");
    std::stable_sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    seq.ground_truth = std::move(gt);
  }

  for (const IndexEntry& e : rgb) {
    TumFrame frame{e.timestamp, e.file, std::nullopt, std::nullopt};
    if (depth) {
      const IndexEntry* d = associate(*depth, e.timestamp, [](const IndexEntry& x) { return x.timestamp; });
      if (d == nullptr) {
        ++seq.dropped;
        continue;
      }
      frame.depth = d->file;
    }
    if (seq.ground_truth) {
      const TrajectoryRecord* g =
          associate(*seq.ground_truth, e.timestamp, [](const TrajectoryRecord& r) { return r.timestamp; });
      if (g != nullptr) frame.ground_truth = g->pose();
    }
    seq.frames.push_back(std::move(frame));
  }

  if (std::filesystem::exists(dir / "camera.txt")) {
    seq.intrinsics = read_camera_file(dir / "camera.txt");
  } else if (!seq.frames.empty()) {
    const Image first = seq.frames.front().load_image();
    seq.intrinsics = default_tum_intrinsics(first.width(), first.height());
  }
  return seq;
}

void write_tum_sequence(const std::filesystem::path& dir, const std::vector<SequenceFrameData>& frames,
                        const CameraIntrinsics& k, const std::optional<Trajectory>& ground_truth) {
  std::filesystem::create_directories(dir / "rgb");
  const bool any_depth = std::any_of(frames.begin(), frames.end(), [](const auto& f) { return f.depth.has_value(); });
  if (any_depth) std::filesystem::create_directories(dir / "depth");

  std::ofstream rgb_index(dir / "rgb.txt");
  std::ofstream depth_index;
  if (any_depth) depth_index.open(dir / "depth.txt");
  if (!rgb_index || (any_depth && !depth_index)) raise(ErrorKind::kIoError, "cannot write index files in " + dir.string());
  rgb_index << "# timestamp filename\n";
  if (any_depth) depth_index << "# timestamp filename\n";

  char name[64];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SequenceFrameData& f = frames[i];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    write_png_image(dir / "rgb" / name, f.image);
    rgb_index << format_double(f.timestamp) << " rgb/" << name << '\n';
    if (f.depth) {
      write_depth_png(dir / "depth" / name, *f.depth);
      depth_index << format_double(f.timestamp) << " depth/" << name << '\n';
    }
  }
  write_camera_file(dir / "camera.txt", k);
  if (ground_truth) write_trajectory(dir / "groundtruth.txt", *ground_truth);
}

}  // namespace kftam
