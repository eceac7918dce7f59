#include "arvae/video_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fs = std::filesystem;

namespace arvae {

namespace {

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// BGR uint8 -> planar RGB float in [0,1]
void mat_to_frame(const cv::Mat& img, Tensor<float>& frames, int t) {
  int h = img.rows, w = img.cols;
  for (int y = 0; y < h; ++y) {
    const cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      frames.at(t, 0, y, x) = row[x][2] / 255.0f;
      frames.at(t, 1, y, x) = row[x][1] / 255.0f;
      frames.at(t, 2, y, x) = row[x][0] / 255.0f;
    }
  }
}

cv::Mat frame_to_mat(const Tensor<float>& frames, int t) {
  int h = frames.dim(2), w = frames.dim(3);
  cv::Mat img(h, w, CV_8UC3);
  auto to_u8 = [](float v) {
    int q = static_cast<int>(std::lround(std::min(std::max(v, 0.0f), 1.0f) * 255.0f));
    return static_cast<std::uint8_t>(q);
  };
  for (int y = 0; y < h; ++y) {
    cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      row[x][2] = to_u8(frames.at(t, 0, y, x));
      row[x][1] = to_u8(frames.at(t, 1, y, x));
      row[x][0] = to_u8(frames.at(t, 2, y, x));
    }
  }
  return img;
}

// scale to cover, then center-crop
cv::Mat fit_to(const cv::Mat& src, int th, int tw) {
  double scale = std::max(static_cast<double>(th) / src.rows,
                          static_cast<double>(tw) / src.cols);
  cv::Mat scaled = src;
  if (scale != 1.0) {
    int nh = std::max(th, static_cast<int>(std::lround(src.rows * scale)));
    int nw = std::max(tw, static_cast<int>(std::lround(src.cols * scale)));
    cv::resize(src, scaled, cv::Size(nw, nh), 0, 0,
               scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  }
  int y0 = (scaled.rows - th) / 2, x0 = (scaled.cols - tw) / 2;
  return scaled(cv::Rect(x0, y0, tw, th)).clone();
}

Clip load_rvid(const std::string& path, int start, int length, int th, int tw) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "load_clip: cannot open ", path);
  std::string magic;
  int w = 0, h = 0, frames = 0;
  float fps = 0;
  is >> magic >> w >> h >> frames >> fps;
  require(magic == "RVID", "load_clip: ", path, " is not an RVID file");
  is.get();  // newline
  require(start >= 0 && length >= 1 && start + length <= frames,
          "load_clip: insufficient frames (", frames, " available, want [", start,
          ", ", start + length, "))");
  std::size_t frame_bytes = static_cast<std::size_t>(3) * w * h;
  is.seekg(static_cast<std::streamoff>(frame_bytes * start), std::ios::cur);

  Clip clip;
  clip.fps_hint = fps;
  clip.source_id = path;
  clip.frames = Tensor<float>(Shape{length, 3, th, tw});
  std::vector<std::uint8_t> buf(frame_bytes);
  for (int t = 0; t < length; ++t) {
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    require(is.good(), "load_clip: truncated RVID ", path);
    // planar RGB -> BGR mat for the shared resize path
    cv::Mat img(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y) {
      cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
      for (int x = 0; x < w; ++x) {
        row[x][2] = buf[0 * h * w + y * w + x];
        row[x][1] = buf[1 * h * w + y * w + x];
        row[x][0] = buf[2 * h * w + y * w + x];
      }
    }
    mat_to_frame(fit_to(img, th, tw), clip.frames, t);
  }
  return clip;
}

}  // namespace

Clip load_clip(const std::string& path, int start, int length, int target_h,
               int target_w, int divisor) {
  require(length >= 1, "load_clip: length must be >= 1");
  require(target_h % divisor == 0 && target_w % divisor == 0,
          "load_clip: target ", target_h, "x", target_w, " not divisible by ", divisor);
  require(fs::exists(path), "load_clip: missing path ", path);

  if (!fs::is_directory(path)) {
    Clip c = load_rvid(path, start, length, target_h, target_w);
    check_clip_invariants(c, divisor);
    return c;
  }

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && is_frame_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "load_clip: no frames in ", path);
  require(start >= 0 && start + length <= static_cast<int>(files.size()),
          "load_clip: insufficient frames (", files.size(), " available, want [",
          start, ", ", start + length, "))");

  Clip clip;
  clip.source_id = path;
  clip.frames = Tensor<float>(Shape{length, 3, target_h, target_w});
  for (int t = 0; t < length; ++t) {
    cv::Mat img = cv::imread(files[start + t].string(), cv::IMREAD_COLOR);
    require(!img.empty(), "load_clip: unreadable frame ", files[start + t].string());
    mat_to_frame(fit_to(img, target_h, target_w), clip.frames, t);
  }
  check_clip_invariants(clip, divisor);
  return clip;
}

void save_frames_png(const std::string& dir, const Tensor<float>& frames,
                     const std::string& stem) {
  require(frames.rank() == 4 && frames.dim(1) == 3, "save_frames_png: want (T,3,H,W)");
  fs::create_directories(dir);
  char name[64];
  for (int t = 0; t < frames.dim(0); ++t) {
    std::snprintf(name, sizeof(name), "%s_%04d.png", stem.c_str(), t);
    cv::Mat img = frame_to_mat(frames, t);
    require(cv::imwrite((fs::path(dir) / name).string(), img),
            "save_frames_png: write failed in ", dir);
  }
}

void write_rvid(const std::string& path, const Tensor<float>& frames, float fps) {
  require(frames.rank() == 4 && frames.dim(1) == 3, "write_rvid: want (T,3,H,W)");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_rvid: cannot open ", path);
  int t_n = frames.dim(0), h = frames.dim(2), w = frames.dim(3);
  os << "RVID " << w << " " << h << " " << t_n << " " << fps << "\n";
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(3) * h * w);
  for (int t = 0; t < t_n; ++t) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          float v = std::min(std::max(frames.at(t, c, y, x), 0.0f), 1.0f);
          buf[static_cast<std::size_t>(c) * h * w + y * w + x] =
              static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
  }
}

void write_flo(const std::string& path, const Tensor<float>& flow) {
  require(flow.rank() == 3 && flow.dim(0) == 2, "write_flo: want (2,H,W)");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_flo: cannot open ", path);
  const float magic = 202021.25f;
  std::int32_t w = flow.dim(2), h = flow.dim(1);
  os.write(reinterpret_cast<const char*>(&magic), 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  os.write(reinterpret_cast<const char*>(&h), 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float uv[2] = {flow.at(0, y, x), flow.at(1, y, x)};
      os.write(reinterpret_cast<const char*>(uv), 8);
    }
}

Tensor<float> read_flo(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_flo: cannot open ", path);
  float magic = 0;
  std::int32_t w = 0, h = 0;
  is.read(reinterpret_cast<char*>(&magic), 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  is.read(reinterpret_cast<char*>(&h), 4);
  require(magic == 202021.25f, "read_flo: bad magic in ", path);
  Tensor<float> flow(Shape{2, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float uv[2];
      is.read(reinterpret_cast<char*>(uv), 8);
      flow.at(0, y, x) = uv[0];
      flow.at(1, y, x) = uv[1];
    }
  require(is.good(), "read_flo: truncated ", path);
  return flow;
}

void write_mask_png(const std::string& path, const Tensor<std::uint8_t>& mask) {
  require(mask.rank() == 3 && mask.dim(0) == 1, "write_mask_png: want (1,H,W)");
  int h = mask.dim(1), w = mask.dim(2);
  cv::Mat img(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at<std::uint8_t>(y, x) = mask.at(0, y, x) ? 255 : 0;
  require(cv::imwrite(path, img), "write_mask_png: write failed ", path);
}

}  // namespace arvae
