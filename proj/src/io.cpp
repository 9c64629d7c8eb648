#include "fdt/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fdt {

namespace fs = std::filesystem;

GroundTruthError::GroundTruthError(const std::string& source, int line, int column, const std::string& why)
    : DataError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + why),
      line_(line),
      column_(column) {}

namespace {

bool is_separator(char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

std::vector<BoundingBox> parse_ground_truth(std::istream& in, const std::string& source) {
  std::vector<BoundingBox> boxes;
  std::string line;
  int line_no = 0;
  int blank_since = 0;  // first blank line of the current trailing blank run
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      if (blank_since == 0) blank_since = line_no;
      continue;
    }
    if (blank_since != 0) throw GroundTruthError(source, blank_since, 1, "blank line before the last box");

    double v[4];
    int field = 0;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && is_separator(line[pos])) ++pos;
      if (pos >= line.size()) break;
      const int column = static_cast<int>(pos) + 1;
      if (field == 4) throw GroundTruthError(source, line_no, column, "more than 4 values");
      std::size_t end = pos;
      while (end < line.size() && !is_separator(line[end])) ++end;
      const std::string token = line.substr(pos, end - pos);
      char* stop = nullptr;
      const double value = std::strtod(token.c_str(), &stop);
      if (stop != token.c_str() + token.size() || !std::isfinite(value))
        throw GroundTruthError(source, line_no, column, "not a number: '" + token + "'");
      v[field++] = value;
      pos = end;
    }
    if (field < 4)
      throw GroundTruthError(source, line_no, static_cast<int>(line.size()) + 1,
                             "expected 4 values, found " + std::to_string(field));
    if (!(v[2] > 0) || !(v[3] > 0)) throw GroundTruthError(source, line_no, 1, "box width and height must be > 0");
    boxes.push_back({v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
  }
  return boxes;
}

std::vector<BoundingBox> read_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open ground truth " + path.string());
  return parse_ground_truth(in, path.string());
}

Image SequenceDir::load_frame(int i) const {
  if (i < 0 || i >= frame_count()) throw DataError("frame index " + std::to_string(i) + " out of range");
  try {
    return read_pnm(frames[static_cast<std::size_t>(i)]);
  } catch (const ImageError& e) {
    throw DataError(e.what());
  }
}

SequenceDir open_sequence(const fs::path& dir, bool require_all_boxes) {
  if (!fs::is_directory(dir)) throw MissingFileError("sequence directory not found: " + dir.string());
  SequenceDir seq;
  seq.dir = dir;
  struct Entry {
    long long number;
    fs::path path;
  };
  std::vector<Entry> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (ext != ".ppm" && ext != ".pgm" && ext != ".pnm") continue;
    const std::string stem = e.path().stem().string();
    std::string digits;
    for (char c : stem)
      if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
    if (digits.empty()) throw DataError("frame file name has no number: " + e.path().string());
    entries.push_back({std::stoll(digits.substr(0, 18)), e.path()});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.number != b.number ? a.number < b.number : a.path < b.path;
  });
  for (auto& e : entries) seq.frames.push_back(std::move(e.path));
  if (seq.frames.empty()) throw MissingFileError("no .ppm/.pgm frames in " + dir.string());

  const fs::path gt = dir / kGroundTruthFile;
  if (!fs::exists(gt)) throw MissingFileError("missing " + gt.string());
  seq.ground_truth = read_ground_truth(gt);
  if (seq.ground_truth.empty()) throw DataError(gt.string() + " has no box for frame 1");
  if (seq.ground_truth.size() > seq.frames.size())
    throw DataError(gt.string() + " has " + std::to_string(seq.ground_truth.size()) + " boxes for " +
                    std::to_string(seq.frames.size()) + " frames");
  if (require_all_boxes && seq.ground_truth.size() != seq.frames.size())
    throw DataError(gt.string() + " has " + std::to_string(seq.ground_truth.size()) + " boxes, expected one per frame (" +
                    std::to_string(seq.frames.size()) + ")");
  return seq;
}

void write_sequence(const Video& video, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%04zu.%s", i + 1, video.frames[i].channels == 1 ? "pgm" : "ppm");
    write_pnm(video.frames[i], dir / name);
  }
  std::ofstream out(dir / kGroundTruthFile);
  if (!out) throw DataError("cannot write " + (dir / kGroundTruthFile).string());
  for (const auto& b : video.ground_truth) out << b.x + 1 << ',' << b.y + 1 << ',' << b.w << ',' << b.h << '\n';
}

void write_results(std::ostream& os, const std::vector<FrameResult>& frames) {
  char line[160];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof line, "%.4f,%.4f,%.4f,%.4f,%.6f,%d\n", f.box.x + 1, f.box.y + 1, f.box.w, f.box.h,
                  f.score, f.iterations_used);
    os << line;
  }
}

void write_results(const fs::path& path, const std::vector<FrameResult>& frames) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_results(out, frames);
}

std::vector<BoundingBox> read_result_boxes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open results " + path.string());
  // Drop score and iteration columns, then reuse the ground-truth parser.
  std::stringstream boxes;
  std::string line;
  while (std::getline(in, line)) {
    int commas = 0;
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i)
      if (line[i] == ',' && ++commas == 4) {
        cut = i;
        break;
      }
    boxes << line.substr(0, cut) << '\n';
  }
  return parse_ground_truth(boxes, path.string());
}

void write_frame_log(std::ostream& os, const std::vector<FrameResult>& frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    nlohmann::json j;
    j["frame"] = i + 1;
    j["box"] = {f.box.x + 1, f.box.y + 1, f.box.w, f.box.h};
    j["score"] = f.score;
    j["updated"] = f.updated;
    j["iterations"] = f.iterations_used;
    j["losses"] = f.loss_trace;
    os << j.dump() << '\n';
  }
}

}  // namespace fdt
