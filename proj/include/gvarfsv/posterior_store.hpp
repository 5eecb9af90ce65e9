#pragma once

#include <iosfwd>
#include <string>

#include "gvarfsv/sampler.hpp"

namespace gvarfsv {

/// Newline-delimited JSON. Line 1 is a header object:
///   {"format": "gvarfsv-posterior", "version": 1, "dims": {...}, "prior": {...},
///    "sampler": {...}, "labels": {...}, "layout": [...]}
/// Each following line is one retained draw:
///   {"iteration": n, "regions": [beta_1, ..., beta_N], "national": vec,
///    "mu": [...], "v": [...], "loadings": vec, "sv_factors": [[level, persistence, innovation_var], ...],
///    "sv_idio": [...], "mean_factor_var": [...], "mean_idio_var": [...],
///    "factors": vec, "log_vol_factors": vec, "log_vol_idio": vec}
/// Every matrix is flattened column-major ("vec"); beta_i follows
/// RegionCoefficients::pack and "national" follows NationalCoefficients::pack.
/// Path blocks are empty arrays when paths were not stored. Doubles are
/// written in shortest round-trip form, so reading back is lossless.
void write_posterior(std::ostream& out, const PosteriorStore& store);
PosteriorStore read_posterior(std::istream& in);

void save_posterior(const std::string& path, const PosteriorStore& store);
PosteriorStore load_posterior(const std::string& path);

}  // namespace gvarfsv
