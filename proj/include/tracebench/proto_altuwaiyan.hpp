#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tracebench/crypto.hpp"
#include "tracebench/party_view.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

/// Carried with every tuple but never used for matching.
enum class DeviceType : std::uint8_t { kPhone = 0, kAccessPoint = 1 };

struct ObservationTuple {
  std::uint64_t m = 0;
  SignalStrength r;
  DeviceType p = DeviceType::kPhone;
  /// The logging device itself, at distance zero. Lets a match against a
  /// party's own identifier yield a direct distance.
  bool own = false;
  Origin origin = Origin::kGenuine;
};

/// Bucket index -> tuples sorted by m, one per identifier.
struct BucketedLog {
  std::map<std::int64_t, std::vector<ObservationTuple>> entries;
};

/// Adds every hearing to `bucket`, keeping the strongest r per identifier.
/// A bucket with at least one hearing also holds the owner's own tuple.
void alt_sense(BucketedLog& log, std::uint64_t own_m, DeviceType own_p, std::int64_t bucket,
               const std::vector<ObservationTuple>& hearings);

/// Buckets in [first, last).
BucketedLog alt_slice(const BucketedLog& log, std::int64_t first, std::int64_t last);

struct MatchServerState {
  std::map<UserId, BucketedLog> infected_logs;
  /// Identifiers of fixed infrastructure with known positions.
  std::map<std::uint64_t, GeoPoint> static_map;
  PartyView view{"match-server"};
};

/// Stores a reporter's log. Returns the number of buckets the server can
/// place on the map through a static identifier.
std::size_t alt_upload(MatchServerState& server, UserId reporter, const BucketedLog& log,
                       std::uint64_t event_id = 0);

/// Exact intersection of the requester's buckets with every stored log,
/// sorted by (reporter, bucket). The requester's buckets are recorded in
/// the server's view.
std::vector<std::pair<UserId, std::int64_t>> alt_timestamp_overlap(MatchServerState& server, UserId requester,
                                                                   const std::vector<std::int64_t>& buckets,
                                                                   std::uint64_t event_id = 0);

struct AltMatrix {
  std::size_t rows = 0;  // reporter tuples
  std::size_t cols = 0;  // requester tuples
  std::vector<HECiphertext> cells;  // row-major

  const HECiphertext& at(std::size_t a, std::size_t b) const { return cells.at(a * cols + b); }
  std::size_t wire_bytes() const { return cells.size() * HECiphertext::kWireBytes; }
};

/// cell(a, b) = Rand(Enc(req_b) - reporter_a.m). Throws ArgumentError for
/// empty inputs or an m outside the message space.
AltMatrix alt_build_matrix(const HEPublicKey& pk, const std::vector<HECiphertext>& enc_requester_ms,
                           const std::vector<ObservationTuple>& reporter_tuples, RandomStream& rand);

/// Zero-tests every cell and returns the requester tuples whose column holds
/// a zero, in column order. Throws ProtocolError when the matrix width does
/// not match own_tuples.
std::vector<ObservationTuple> alt_client_match(const HESecretKey& sk, const AltMatrix& matrix,
                                               const std::vector<ObservationTuple>& own_tuples);

/// Records a disclosure from a session in the server's view.
void alt_receive_disclosure(MatchServerState& server, UserId requester, UserId reporter, std::int64_t bucket,
                            const std::vector<ObservationTuple>& disclosed, std::uint64_t event_id = 0);

struct AltDeviceDistance {
  std::uint64_t m = 0;
  double requester_m = 0.0;
  double reporter_m = 0.0;
  double bound_m = 0.0;  // requester_m + reporter_m
  Origin origin = Origin::kGenuine;
};

struct AltBucketEstimate {
  std::vector<AltDeviceDistance> devices;
  std::optional<double> bound_m;  // min over devices
  Origin origin = Origin::kGenuine;
};

/// Per shared device, inverts path loss on both sides and sums the radii;
/// the bucket bound is the smallest sum. An upper bound on the true
/// separation under the noiseless model.
AltBucketEstimate alt_distance(const RadioModel& model, const std::vector<ObservationTuple>& disclosed,
                               const std::vector<ObservationTuple>& reporter_tuples);

struct AltVerdict {
  std::map<std::int64_t, double> bucket_bound_m;
  std::optional<double> estimate_m;  // mean of bucket bounds
  std::optional<bool> verdict;       // nullopt without any match
  Seconds close_s = 0;
  Origin origin = Origin::kGenuine;
};

/// A bucket is close when its bound is within `close_m`; the contact is
/// flagged once close buckets cover `min_duration_s`.
AltVerdict alt_verdict(const std::map<std::int64_t, AltBucketEstimate>& buckets, double close_m,
                       Seconds bucket_s, Seconds min_duration_s);

}  // namespace tracebench
