#include "data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "core/rng.hpp"

namespace kpfc {

namespace {
using nlohmann::json;

void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}
}  // namespace

std::vector<MotionClip> load_clips(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open clip file: " + path);

  struct Pending {
    std::vector<std::pair<int, FrameData>> frames;
    int behavior = -1;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> by_id;

  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("clip_id") || !rec.contains("frame") || !rec.contains("kp"))
      fail(ErrorCode::Schema,
           path + ":" + std::to_string(line_no) + ": record needs clip_id, frame and kp fields");
    if (!rec["clip_id"].is_string() || !rec["frame"].is_number_integer() || !rec["kp"].is_array())
      fail(ErrorCode::Schema, path + ":" + std::to_string(line_no) + ": field types are wrong");
    const auto& kp = rec["kp"];
    if (kp.size() != kJoints)
      fail(ErrorCode::Schema, path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(kJoints) + " keypoints, got " +
                                  std::to_string(kp.size()));
    FrameData frame;
    for (int j = 0; j < kJoints; ++j) {
      const auto& pt = kp[static_cast<size_t>(j)];
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
        fail(ErrorCode::Schema,
             path + ":" + std::to_string(line_no) + ": keypoint " + std::to_string(j) + " is not [x,y]");
      const double x = pt[0].get<double>();
      const double y = pt[1].get<double>();
      if (!std::isfinite(x) || !std::isfinite(y))
        fail(ErrorCode::Numeric, path + ":" + std::to_string(line_no) + ": non-finite coordinate");
      frame[static_cast<size_t>(2 * j)] = static_cast<float>(x);
      frame[static_cast<size_t>(2 * j + 1)] = static_cast<float>(y);
    }
    const std::string id = rec["clip_id"].get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      order.push_back(id);
      it = by_id.emplace(id, Pending{}).first;
    }
    it->second.frames.emplace_back(rec["frame"].get<int>(), frame);
  }

  std::vector<MotionClip> clips;
  clips.reserve(order.size());
  for (const auto& id : order) {
    auto& pending = by_id.at(id);
    std::stable_sort(pending.frames.begin(), pending.frames.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    MotionClip clip;
    clip.clip_id = id;
    clip.behavior = pending.behavior;
    clip.frames.reserve(pending.frames.size());
    for (size_t i = 0; i < pending.frames.size(); ++i) {
      if (i > 0) {
        const int prev = pending.frames[i - 1].first;
        const int cur = pending.frames[i].first;
        if (cur == prev)
          fail(ErrorCode::Schema, "clip " + id + ": duplicate frame index " + std::to_string(cur));
        if (cur != prev + 1)
          fail(ErrorCode::Schema, "clip " + id + ": gap between frames " + std::to_string(prev) +
                                      " and " + std::to_string(cur));
      }
      clip.frames.push_back(pending.frames[i].second);
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

void save_clips(const std::vector<MotionClip>& clips, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write clip file: " + path);
  std::string buf;
  buf.reserve(1 << 20);
  for (const auto& clip : clips) {
    for (size_t f = 0; f < clip.frames.size(); ++f) {
      buf += "{\"clip_id\":";
      buf += json(clip.clip_id).dump();
      buf += ",\"frame\":";
      buf += std::to_string(f);
      buf += ",\"kp\":[";
      const auto& frame = clip.frames[f];
      for (int j = 0; j < kJoints; ++j) {
        if (j) buf += ',';
        buf += '[';
        append_number(buf, frame[static_cast<size_t>(2 * j)]);
        buf += ',';
        append_number(buf, frame[static_cast<size_t>(2 * j + 1)]);
        buf += ']';
      }
      buf += "]}\n";
      if (buf.size() > (1 << 20)) {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::Io, "short write: " + path);
}

void save_labels(const std::vector<MotionClip>& clips, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write label file: " + path);
  for (const auto& clip : clips) {
    json rec = {{"clip_id", clip.clip_id}, {"behavior", clip.behavior}};
    out << rec.dump() << "\n";
  }
  if (!out) fail(ErrorCode::Io, "short write: " + path);
}

std::array<double, kFrameDim> normalize_frame64(std::span<const double, kFrameDim> frame,
                                                double* cx, double* cy, double* scale) {
  double sx = 0.0, sy = 0.0;
  for (int j = 0; j < kJoints; ++j) {
    const double x = frame[static_cast<size_t>(2 * j)];
    const double y = frame[static_cast<size_t>(2 * j + 1)];
    if (!std::isfinite(x) || !std::isfinite(y))
      fail(ErrorCode::Numeric, "normalize_frame: non-finite keypoint");
    sx += x;
    sy += y;
  }
  const double mx = sx / kJoints, my = sy / kJoints;
  std::array<double, kFrameDim> centered;
  double max_r2 = 0.0;
  for (int j = 0; j < kJoints; ++j) {
    const double x = frame[static_cast<size_t>(2 * j)] - mx;
    const double y = frame[static_cast<size_t>(2 * j + 1)] - my;
    centered[static_cast<size_t>(2 * j)] = x;
    centered[static_cast<size_t>(2 * j + 1)] = y;
    max_r2 = std::max(max_r2, x * x + y * y);
  }
  double s = std::sqrt(max_r2);
  if (s < 1e-9) s = 1.0;  // collapsed frame: keep centered coordinates as-is
  for (auto& v : centered) v /= s;
  *cx = mx;
  *cy = my;
  *scale = s;
  return centered;
}

NormalizedFrame normalize_frame(std::span<const float, kFrameDim> frame) {
  std::array<double, kFrameDim> wide;
  for (int j = 0; j < kFrameDim; ++j) wide[static_cast<size_t>(j)] = frame[static_cast<size_t>(j)];
  double cx, cy, scale;
  const auto norm = normalize_frame64(wide, &cx, &cy, &scale);
  NormalizedFrame out;
  for (int j = 0; j < kFrameDim; ++j) out.frame[static_cast<size_t>(j)] = static_cast<float>(norm[static_cast<size_t>(j)]);
  out.params = {static_cast<float>(cx), static_cast<float>(cy), static_cast<float>(scale)};
  return out;
}

void denormalize_frame(std::span<const float, kFrameDim> frame, const DenormParams& params,
                       std::span<float, kFrameDim> out) {
  if (!(params.scale > 0.0f)) fail(ErrorCode::InvalidArgument, "denormalize_frame: scale must be positive");
  for (int j = 0; j < kJoints; ++j) {
    out[static_cast<size_t>(2 * j)] = static_cast<float>(
        static_cast<double>(frame[static_cast<size_t>(2 * j)]) * params.scale + params.cx);
    out[static_cast<size_t>(2 * j + 1)] = static_cast<float>(
        static_cast<double>(frame[static_cast<size_t>(2 * j + 1)]) * params.scale + params.cy);
  }
}

std::vector<Window> make_windows(const MotionClip& clip, int t_in, int t_out, int step) {
  if (t_in < 1 || t_out < 1 || step < 1)
    fail(ErrorCode::InvalidArgument, "make_windows: t_in, t_out and step must be positive");
  std::vector<Window> windows;
  const int64_t len = static_cast<int64_t>(clip.frames.size());
  const int64_t span = static_cast<int64_t>(t_in) + t_out;
  if (len < span) return windows;
  const int64_t count = (len - span) / step + 1;
  windows.reserve(static_cast<size_t>(count));
  for (int64_t w = 0; w < count; ++w) {
    const int start = static_cast<int>(w * step);
    Window win;
    win.t_in = t_in;
    win.t_out = t_out;
    win.clip_id = clip.clip_id;
    win.start = start;
    win.input.resize(static_cast<size_t>(t_in) * kFrameDim);
    win.target.resize(static_cast<size_t>(t_out) * kFrameDim);
    win.denorm.resize(static_cast<size_t>(t_in + t_out));
    for (int f = 0; f < t_in + t_out; ++f) {
      const auto norm = normalize_frame(clip.frames[static_cast<size_t>(start + f)]);
      win.denorm[static_cast<size_t>(f)] = norm.params;
      float* dst = f < t_in ? win.input.data() + static_cast<size_t>(f) * kFrameDim
                            : win.target.data() + static_cast<size_t>(f - t_in) * kFrameDim;
      std::copy(norm.frame.begin(), norm.frame.end(), dst);
    }
    windows.push_back(std::move(win));
  }
  return windows;
}

std::vector<Window> make_windows(const std::vector<MotionClip>& clips, int t_in, int t_out, int step) {
  std::vector<Window> all;
  for (const auto& clip : clips) {
    auto w = make_windows(clip, t_in, t_out, step);
    all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return all;
}

std::pair<std::vector<Window>, std::vector<Window>> split_windows(std::vector<Window> windows,
                                                                  double train_fraction,
                                                                  uint64_t seed, bool by_clip) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "split: train fraction must be in (0, 1)");
  const size_t n = windows.size();
  const size_t n_train = static_cast<size_t>(
      std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  CounterRng rng(seed, 0x511f7u);

  std::vector<Window> train, test;
  if (!by_clip) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    train.reserve(n_train);
    test.reserve(n - n_train);
    for (size_t i = 0; i < n; ++i)
      (i < n_train ? train : test).push_back(std::move(windows[idx[i]]));
  } else {
    std::vector<std::string> clip_order;
    std::unordered_map<std::string, std::vector<size_t>> by_id;
    for (size_t i = 0; i < n; ++i) {
      auto it = by_id.find(windows[i].clip_id);
      if (it == by_id.end()) {
        clip_order.push_back(windows[i].clip_id);
        it = by_id.emplace(windows[i].clip_id, std::vector<size_t>{}).first;
      }
      it->second.push_back(i);
    }
    for (size_t i = clip_order.size(); i > 1; --i)
      std::swap(clip_order[i - 1], clip_order[rng.below(i)]);
    size_t assigned = 0;
    for (const auto& id : clip_order) {
      const bool to_train = assigned < n_train;
      for (size_t wi : by_id.at(id)) (to_train ? train : test).push_back(std::move(windows[wi]));
      if (to_train) assigned += by_id.at(id).size();
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace kpfc
