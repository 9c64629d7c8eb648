#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdt/geometry.hpp"
#include "fdt/image.hpp"
#include "fdt/synthetic.hpp"
#include "fdt/tracking.hpp"

namespace fdt {

/// Bad or missing input data (frames, ground truth, result files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required file or directory does not exist.
class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed ground-truth text; line and column are 1-based.
class GroundTruthError : public DataError {
 public:
  GroundTruthError(const std::string& source, int line, int column, const std::string& why);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

inline constexpr const char* kGroundTruthFile = "groundtruth_rect.txt";

/// Parses "x,y,w,h" lines (comma, tab or space separated, 1-based pixels)
/// into 0-based boxes. Blank lines are allowed only at the end.
std::vector<BoundingBox> parse_ground_truth(std::istream& in, const std::string& source = "<input>");
std::vector<BoundingBox> read_ground_truth(const std::filesystem::path& path);

struct SequenceDir {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> frames;  // numeric order
  std::vector<BoundingBox> ground_truth;      // 0-based

  int frame_count() const { return static_cast<int>(frames.size()); }
  Image load_frame(int i) const;
};

/// Lists .ppm/.pgm/.pnm frames sorted by the number in their file name and
/// reads the ground truth. Requires >= 1 frame, a box for frame 1, and no more
/// boxes than frames; `require_all_boxes` also demands one box per frame.
SequenceDir open_sequence(const std::filesystem::path& dir, bool require_all_boxes = false);

/// Writes frames as 0001.ppm ... plus the ground-truth file.
void write_sequence(const Video& video, const std::filesystem::path& dir);

/// One "x,y,w,h,score,iterations" line per frame, boxes 1-based.
void write_results(std::ostream& os, const std::vector<FrameResult>& frames);
void write_results(const std::filesystem::path& path, const std::vector<FrameResult>& frames);

/// Reads the boxes of a result file back (0-based). Extra columns are ignored.
std::vector<BoundingBox> read_result_boxes(const std::filesystem::path& path);

/// One JSON object per frame: frame, box, score, updated, iterations, losses.
void write_frame_log(std::ostream& os, const std::vector<FrameResult>& frames);

}  // namespace fdt
