#pragma once

#include <string>

#include <json.hpp>

#include "covertime/chain.hpp"
#include "covertime/exact.hpp"
#include "covertime/martingale.hpp"
#include "covertime/mc.hpp"
#include "covertime/partition.hpp"

namespace covertime {

using nlohmann::json;

json to_json(const Estimate& e);
json to_json(const HittingReport& r);
json to_json(const BallSets& b);
json to_json(const SpectralReport& r);
json to_json(const ExpanderBoundsReport& r);
json to_json(const HeavyWitnessReport& r);
json to_json(const MartingaleParams& p);
json to_json(const MartingaleTrace& t);
json to_json(const AssocReport& r);
json to_json(const ConcentrationReport& r);
json to_json(const Partition& p);
json to_json(const CorPReport& r);
json to_json(const ScaleChoice& s);
json to_json(const GenericDiagnostics& d);

Partition partition_from_json(const json& j);

/// FNV-1a digest of a file's bytes, as fixed-width hex.
std::string file_digest(const std::string& path);

} // namespace covertime
