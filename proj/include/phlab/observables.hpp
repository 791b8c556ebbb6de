#pragma once

#include "phlab/torus.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phlab {

enum class ObservableKind { Cos, Sin, Bump };

/// Character cos/sin(2 pi <m, x>) with |m|_inf <= 3, or a Hölder bump
/// (1 - d(x, center) / radius)_+^exponent.
struct Observable {
  ObservableKind kind = ObservableKind::Cos;
  std::array<int, 3> m{};
  TorusPoint center;
  double radius = 0.0;
  double exponent = 1.0;

  static Observable character(std::array<int, 3> m, ObservableKind kind);
  static Observable bump(const TorusPoint& center, double radius, double exponent);

  double operator()(const TorusPoint& x) const;
  /// Round-trips through parse_observable, e.g. "cos:1,0,0" or
  /// "bump:0,0,0:0.1:0.5".
  std::string name() const;
};

Observable parse_observable(std::string_view text);

constexpr std::size_t kDictionarySize = 124;
constexpr int kHistogramBins = 16;
constexpr std::size_t kHistogramCells = kHistogramBins * kHistogramBins * kHistogramBins;

using DictionaryValues = std::array<double, kDictionarySize>;

/// Frequencies 0 < |m|_inf <= 2 with the first nonzero entry positive, in
/// lexicographic order; entry 2i is cos, 2i + 1 is sin of frequency i.
const std::vector<std::array<int, 3>>& dictionary_frequencies();
std::vector<Observable> dictionary();

/// All 124 values at x via products of e^{2 pi i x_j} powers.
void evaluate_dictionary(const TorusPoint& x, DictionaryValues& out);

/// Index of the 16^3 histogram cell containing x.
std::size_t histogram_cell(const TorusPoint& x);

}  // namespace phlab
