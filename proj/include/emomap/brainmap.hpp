#pragma once

// Spatial mapping of CNS channels onto a cuboid and functional mapping of
// PNS signals via region centres pulled toward the brain centre.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <compare>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/matrix.hpp"

namespace emomap {

struct GridCoord {
  int x = 0;
  int y = 0;
  int z = 0;

  auto operator<=>(const GridCoord&) const = default;
};

inline std::string to_string(const GridCoord& c) {
  return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", " + std::to_string(c.z) + ")";
}

struct CuboidDims {
  int x = 9;
  int y = 9;
  int z = 9;

  bool contains(const GridCoord& c) const noexcept {
    return c.x >= 0 && c.x < x && c.y >= 0 && c.y < y && c.z >= 0 && c.z < z;
  }
  std::size_t cells() const noexcept { return static_cast<std::size_t>(x) * y * z; }
  // Z is the fastest axis.
  std::size_t index(const GridCoord& c) const noexcept {
    return (static_cast<std::size_t>(c.x) * y + c.y) * z + c.z;
  }
  bool operator==(const CuboidDims&) const = default;
};

class DuplicateCoordinate : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RejectedSignal : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CuboidExhausted : public NumericError {
 public:
  using NumericError::NumericError;
};

struct BrainRegion {
  std::string name;
  std::vector<std::string> member_electrodes;
};

struct PnsPlacement {
  PnsType type{};
  std::size_t row = 0;  // region row within the type
  std::string region;
  GridCoord dpc;   // region centre
  GridCoord cell;  // final location
};

struct ElectrodeMap {
  CuboidDims dims;
  GridCoord brain_center{4, 4, 3};
  std::vector<std::pair<std::string, GridCoord>> cns;  // table order
  std::vector<PnsPlacement> pns;

  std::optional<GridCoord> cns_coord(std::string_view name) const {
    for (const auto& [n, c] : cns) {
      if (n == name) return c;
    }
    return std::nullopt;
  }

  std::set<GridCoord> cns_cells() const {
    std::set<GridCoord> s;
    for (const auto& [n, c] : cns) s.insert(c);
    return s;
  }

  // CNS cells, placed PNS cells and the reserved brain-centre cell.
  std::set<GridCoord> occupied() const {
    auto s = cns_cells();
    for (const auto& p : pns) s.insert(p.cell);
    s.insert(brain_center);
    return s;
  }

  std::vector<GridCoord> pns_cells(PnsType t) const {
    std::vector<GridCoord> out;
    for (const auto& p : pns) {
      if (p.type == t) out.push_back(p.cell);
    }
    return out;
  }

  std::set<PnsType> pns_types() const {
    std::set<PnsType> s;
    for (const auto& p : pns) s.insert(p.type);
    return s;
  }
};

inline void check_cns_table(const ElectrodeMap& m) {
  std::set<std::string> names;
  std::map<GridCoord, std::string> cells;
  for (const auto& [name, c] : m.cns) {
    if (!m.dims.contains(c)) throw ValidationError("electrode " + name + " at " + to_string(c) + " is outside the cuboid");
    if (!names.insert(name).second) throw ValidationError("electrode " + name + " listed twice");
    auto [it, fresh] = cells.try_emplace(c, name);
    if (!fresh) {
      throw DuplicateCoordinate("electrodes " + it->second + " and " + name + " share cell " + to_string(c));
    }
  }
  if (!m.dims.contains(m.brain_center)) throw ValidationError("brain centre outside the cuboid");
}

// TSV rows `name<TAB>x<TAB>y<TAB>z`; '#' starts a comment line.
inline ElectrodeMap parse_coordinate_table(std::istream& in, CuboidDims dims = {}, GridCoord center = {4, 4, 3}) {
  ElectrodeMap m;
  m.dims = dims;
  m.brain_center = center;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    GridCoord c;
    if (!std::getline(ls, name, '\t') || !(ls >> c.x >> c.y >> c.z) || name.empty()) {
      throw ValidationError("coordinate table line " + std::to_string(lineno) + " is malformed");
    }
    std::string rest;
    if (ls >> rest) throw ValidationError("coordinate table line " + std::to_string(lineno) + " has extra fields");
    m.cns.emplace_back(std::move(name), c);
  }
  check_cns_table(m);
  return m;
}

inline ElectrodeMap load_coordinate_table(const std::filesystem::path& path, CuboidDims dims = {},
                                          GridCoord center = {4, 4, 3}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open coordinate table '" + path.string() + "'");
  return parse_coordinate_table(in, dims, center);
}

// Common 9x9 DEAP grid (x: left->right column, y: front->back row) lifted onto
// a dome: z = 3 + round(5 sqrt(1 - d^2 / 20.25)), d the planar distance to
// (4, 4). Identical to data/deap32.tsv.
inline constexpr std::string_view kDeap32Table =
    "Fp1\t3\t0\t5\nAF3\t3\t1\t7\nF3\t2\t2\t7\nF7\t0\t2\t4\nFC5\t1\t3\t7\nFC1\t3\t3\t8\n"
    "C3\t2\t4\t7\nT7\t0\t4\t5\nCP5\t1\t5\t7\nCP1\t3\t5\t8\nP3\t2\t6\t7\nP7\t0\t6\t4\n"
    "PO3\t3\t7\t7\nO1\t3\t8\t5\nOz\t4\t8\t5\nPz\t4\t6\t7\nFp2\t5\t0\t5\nAF4\t5\t1\t7\n"
    "Fz\t4\t2\t7\nF4\t6\t2\t7\nF8\t8\t2\t4\nFC6\t7\t3\t7\nFC2\t5\t3\t8\nCz\t4\t4\t8\n"
    "C4\t6\t4\t7\nT8\t8\t4\t5\nCP6\t7\t5\t7\nCP2\t5\t5\t8\nP4\t6\t6\t7\nP8\t8\t6\t4\n"
    "PO4\t5\t7\t7\nO2\t5\t8\t5\n";

inline ElectrodeMap builtin_coordinates(std::string_view montage) {
  if (montage == "deap32") {
    std::istringstream in{std::string(kDeap32Table)};
    return parse_coordinate_table(in);
  }
  throw ValidationError("unknown montage '" + std::string(montage) + "' (built-in: deap32)");
}

inline GridCoord mirror(const GridCoord& c, const CuboidDims& dims) noexcept {
  return {dims.x - 1 - c.x, c.y, c.z};
}

// 10-20 naming: odd subscript = left, even = right, 'z' = midline.
// "F3" -> "F4", "Fz" -> nullopt.
inline std::optional<std::string> lateral_partner(std::string_view name) {
  if (name.empty() || !std::isdigit(static_cast<unsigned char>(name.back()))) return std::nullopt;
  std::size_t i = name.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(name[i - 1]))) --i;
  const int n = std::stoi(std::string(name.substr(i)));
  if (n == 0) return std::nullopt;
  return std::string(name.substr(0, i)) + std::to_string(n % 2 == 1 ? n + 1 : n - 1);
}

// ---------------------------------------------------------------------------
// PNS functional regions

inline std::vector<BrainRegion> get_region(PnsType t) {
  switch (t) {
    case PnsType::eog_h:
      return {{"Frontal", {"Fp1", "F3", "Fz", "AF3"}}, {"Occipital+Parietal", {"PO3", "O1", "Oz"}}};
    case PnsType::eog_v:
      return {{"Frontal", {"Fp2", "F4", "Fz", "AF4"}}, {"Occipital+Parietal", {"PO4", "O2", "Oz"}}};
    case PnsType::emg_zyg:
      return {{"Central(left)", {"FC1", "FC5", "CP1", "CP5"}}, {"Central(right)", {"FC2", "FC6", "CP2", "CP6"}}};
    case PnsType::emg_trap:
      return {{"Central(left)", {"FC1", "CP1", "Cz"}}, {"Central(right)", {"FC2", "CP2", "Cz"}}};
    case PnsType::skin_temp:
      return {{"Central(Occipital)", {"CP1", "PO3", "CP2", "PO4"}}};
    case PnsType::respiration:
      return {{"Central(Bottom)", {}}};
    case PnsType::gsr:
      throw RejectedSignal("gsr is not mapped: no corresponding brain region is known for galvanic skin response");
    case PnsType::plethysmograph:
      throw RejectedSignal(
          "plethysmograph is not mapped: blood volume depends on many factors and has no specific brain region");
  }
  throw RejectedSignal("unsupported PNS type");
}

// Placement order of the mappable PNS types.
inline constexpr PnsType kMappablePns[] = {PnsType::eog_h,    PnsType::eog_v,     PnsType::emg_zyg,
                                           PnsType::emg_trap, PnsType::skin_temp, PnsType::respiration};

// Nearest integer; exact halves go away from `center`.
inline int round_away_from_center(double v, int center) noexcept {
  const double d = v - center;
  const double r = std::floor(std::fabs(d) + 0.5);
  return center + static_cast<int>(d >= 0 ? r : -r);
}

inline int sign(int v) noexcept { return (v > 0) - (v < 0); }

// Free cell for `target`: the target itself, else one step toward the centre
// (component-wise sign), else the first free cell on Chebyshev shells of
// growing radius around the stepped cell, each shell scanned in (dz, dy, dx)
// lexicographic order.
inline GridCoord probe_free_cell(const GridCoord& target, const std::set<GridCoord>& occupied,
                                 const ElectrodeMap& map) {
  const auto& dims = map.dims;
  if (!dims.contains(target)) throw ValidationError("probe target " + to_string(target) + " outside the cuboid");
  if (!occupied.contains(target)) return target;
  const GridCoord c = map.brain_center;
  const GridCoord step{target.x + sign(c.x - target.x), target.y + sign(c.y - target.y),
                       target.z + sign(c.z - target.z)};
  if (!occupied.contains(step)) return step;
  const int max_r = std::max({dims.x, dims.y, dims.z});
  for (int r = 1; r <= max_r; ++r) {
    for (int dz = -r; dz <= r; ++dz) {
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          const GridCoord q{step.x + dx, step.y + dy, step.z + dz};
          if (dims.contains(q) && !occupied.contains(q)) return q;
        }
      }
    }
  }
  throw CuboidExhausted("no free cell left in the cuboid");
}

// Rounded mean of the member electrodes, displaced off CNS cells.
inline GridCoord region_center(const BrainRegion& region, const ElectrodeMap& map) {
  if (region.member_electrodes.empty()) throw ValidationError("region '" + region.name + "' has no electrodes");
  double sx = 0, sy = 0, sz = 0;
  for (const auto& name : region.member_electrodes) {
    const auto c = map.cns_coord(name);
    if (!c) throw ValidationError("region '" + region.name + "' references unmapped electrode " + name);
    sx += c->x;
    sy += c->y;
    sz += c->z;
  }
  const double n = static_cast<double>(region.member_electrodes.size());
  const GridCoord& cp = map.brain_center;
  const GridCoord mean{round_away_from_center(sx / n, cp.x), round_away_from_center(sy / n, cp.y),
                       round_away_from_center(sz / n, cp.z)};
  auto blocked = map.cns_cells();
  blocked.insert(cp);
  return probe_free_cell(mean, blocked, map);
}

// Rounded midpoint of the region centre and the brain centre, displaced off
// every occupied cell.
inline GridCoord pns_location(const GridCoord& dpc, const ElectrodeMap& map) {
  if (!map.dims.contains(dpc)) throw ValidationError("region centre " + to_string(dpc) + " outside the cuboid");
  const GridCoord& cp = map.brain_center;
  const GridCoord mid{round_away_from_center((dpc.x + cp.x) / 2.0, cp.x),
                      round_away_from_center((dpc.y + cp.y) / 2.0, cp.y),
                      round_away_from_center((dpc.z + cp.z) / 2.0, cp.z)};
  return probe_free_cell(mid, map.occupied(), map);
}

// Respiration: bottom layer, directly below the brain centre.
inline GridCoord respiration_location(const ElectrodeMap& map) {
  const GridCoord bottom{map.brain_center.x, map.brain_center.y, 0};
  return probe_free_cell(bottom, map.occupied(), map);
}

// Places each requested PNS type (one cell per region row) in kMappablePns order.
inline ElectrodeMap build_map(ElectrodeMap cns_only, std::span<const PnsType> types) {
  check_cns_table(cns_only);
  ElectrodeMap m = std::move(cns_only);
  m.pns.clear();
  std::set<PnsType> wanted(types.begin(), types.end());
  for (PnsType t : wanted) get_region(t);  // rejects gsr / plethysmograph
  for (PnsType t : kMappablePns) {
    if (!wanted.contains(t)) continue;
    const auto regions = get_region(t);
    for (std::size_t row = 0; row < regions.size(); ++row) {
      PnsPlacement p;
      p.type = t;
      p.row = row;
      p.region = regions[row].name;
      if (t == PnsType::respiration) {
        p.dpc = {m.brain_center.x, m.brain_center.y, 0};
        p.cell = respiration_location(m);
      } else {
        p.dpc = region_center(regions[row], m);
        p.cell = pns_location(p.dpc, m);
      }
      m.pns.push_back(p);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Mapping levels (ablation surface)

enum class MappingLevel { image2d, cns3d, full, without_eog, without_emg, without_resp, without_temp };

inline std::string_view to_string(MappingLevel l) {
  switch (l) {
    case MappingLevel::image2d: return "2d_image";
    case MappingLevel::cns3d: return "3d_cns";
    case MappingLevel::full: return "full";
    case MappingLevel::without_eog: return "without_eog";
    case MappingLevel::without_emg: return "without_emg";
    case MappingLevel::without_resp: return "without_resp";
    case MappingLevel::without_temp: return "without_temp";
  }
  return "?";
}

inline MappingLevel parse_mapping_level(std::string_view s) {
  for (auto l : {MappingLevel::image2d, MappingLevel::cns3d, MappingLevel::full, MappingLevel::without_eog,
                 MappingLevel::without_emg, MappingLevel::without_resp, MappingLevel::without_temp}) {
    if (to_string(l) == s) return l;
  }
  throw ValidationError("unknown mapping level '" + std::string(s) + "'");
}

// z-projection onto a single layer; requires distinct (x, y) per electrode.
inline ElectrodeMap project_2d(const ElectrodeMap& m) {
  ElectrodeMap p;
  p.dims = {m.dims.x, m.dims.y, 1};
  p.brain_center = {m.brain_center.x, m.brain_center.y, 0};
  for (const auto& [name, c] : m.cns) p.cns.emplace_back(name, GridCoord{c.x, c.y, 0});
  check_cns_table(p);
  return p;
}

inline std::vector<PnsType> pns_types_for(MappingLevel level) {
  std::vector<PnsType> all(std::begin(kMappablePns), std::end(kMappablePns));
  auto without = [&](std::initializer_list<PnsType> drop) {
    std::vector<PnsType> out;
    for (auto t : all)
      if (std::find(drop.begin(), drop.end(), t) == drop.end()) out.push_back(t);
    return out;
  };
  switch (level) {
    case MappingLevel::image2d:
    case MappingLevel::cns3d: return {};
    case MappingLevel::full: return all;
    case MappingLevel::without_eog: return without({PnsType::eog_h, PnsType::eog_v});
    case MappingLevel::without_emg: return without({PnsType::emg_zyg, PnsType::emg_trap});
    case MappingLevel::without_resp: return without({PnsType::respiration});
    case MappingLevel::without_temp: return without({PnsType::skin_temp});
  }
  return all;
}

inline ElectrodeMap map_for_level(const ElectrodeMap& cns_only, MappingLevel level) {
  if (level == MappingLevel::image2d) return project_2d(cns_only);
  const auto types = pns_types_for(level);
  return build_map(cns_only, types);
}

// ---------------------------------------------------------------------------
// Tensor assembly

// frames x X x Y x Z, Z fastest.
struct MappedTensor {
  CuboidDims dims;
  std::size_t frames = 0;
  std::vector<float> values;
  SegmentOrigin origin;

  float at(std::size_t f, const GridCoord& c) const { return values[f * dims.cells() + dims.index(c)]; }
};

struct CnsSignal {
  std::string_view name;
  std::span<const double> values;
};

struct PnsSignal {
  PnsType type;
  std::span<const double> values;
};

inline MappedTensor assemble_tensor(std::span<const CnsSignal> cns, std::span<const PnsSignal> pns,
                                    const ElectrodeMap& map) {
  std::size_t frames = 0;
  auto check_frames = [&](std::size_t n) {
    if (frames == 0) frames = n;
    if (n != frames || n == 0) throw ShapeError("assemble_tensor: signals differ in frame count");
  };
  for (const auto& s : cns) check_frames(s.values.size());
  for (const auto& s : pns) check_frames(s.values.size());

  MappedTensor t;
  t.dims = map.dims;
  t.frames = frames;
  t.values.assign(frames * map.dims.cells(), 0.0f);
  const std::size_t vol = map.dims.cells();
  auto write = [&](const GridCoord& c, std::span<const double> v) {
    const std::size_t at = map.dims.index(c);
    for (std::size_t f = 0; f < frames; ++f) t.values[f * vol + at] = static_cast<float>(v[f]);
  };

  std::set<std::string_view> seen;
  for (const auto& s : cns) {
    const auto c = map.cns_coord(s.name);
    if (!c) throw ValidationError("assemble_tensor: channel " + std::string(s.name) + " is not in the map");
    seen.insert(s.name);
    write(*c, s.values);
  }
  for (const auto& [name, c] : map.cns) {
    if (!seen.contains(name)) throw ValidationError("assemble_tensor: no signal for mapped electrode " + name);
  }
  std::set<PnsType> pns_seen;
  for (const auto& s : pns) {
    const auto cells = map.pns_cells(s.type);
    if (cells.empty()) {
      throw ValidationError("assemble_tensor: PNS type " + std::string(to_string(s.type)) + " is not in the map");
    }
    if (!pns_seen.insert(s.type).second) {
      throw ValidationError("assemble_tensor: PNS type " + std::string(to_string(s.type)) + " supplied twice");
    }
    for (const auto& c : cells) write(c, s.values);
  }
  for (PnsType ty : map.pns_types()) {
    if (!pns_seen.contains(ty)) {
      throw ValidationError("assemble_tensor: no signal for mapped PNS type " + std::string(to_string(ty)));
    }
  }
  return t;
}

// Rows of `values` follow `channels`. CNS channels must all be mapped; PNS
// channels are used when their type is in the map and skipped otherwise.
inline MappedTensor assemble_tensor(const Matrix<double>& values, const std::vector<ChannelInfo>& channels,
                                    const ElectrodeMap& map) {
  if (values.rows() != channels.size()) throw ShapeError("assemble_tensor: row count differs from channel table");
  const auto mapped_types = map.pns_types();
  std::vector<CnsSignal> cns;
  std::vector<PnsSignal> pns;
  for (std::size_t r = 0; r < channels.size(); ++r) {
    const auto& ch = channels[r];
    if (ch.kind == ChannelKind::cns) {
      cns.push_back({ch.name, values.row(r)});
    } else if (mapped_types.contains(*ch.pns_type)) {
      pns.push_back({*ch.pns_type, values.row(r)});
    }
  }
  return assemble_tensor(cns, pns, map);
}

}  // namespace emomap
