#include "etd/pipeline.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include "etd/capture.hpp"
#include "etd/error.hpp"
#include "etd/features.hpp"
#include "etd/tls_features.hpp"

namespace etd {

namespace {

struct CaptureOutput {
  CaptureStats stats;
  std::vector<LabeledRow> rows;
  std::vector<ConnRecord> conns;
  std::vector<SslRecord> ssls;
  std::vector<std::string> session_json;
};

CaptureOutput process_capture(const std::filesystem::path& path, std::size_t capture_index,
                              const ExtractOptions& options, CertificateStore& store) {
  CaptureOutput out;
  out.stats.path = path.string();

  CaptureReader reader(path);
  std::vector<DecodedPacket> packets;
  while (auto frame = reader.next()) {
    ++out.stats.frames;
    auto decoded = decode_packet(*frame);
    const auto verdict = filter_packet(decoded, options.filter);
    if (!verdict.keep) {
      ++out.stats.dropped[to_string(verdict.reason)];
      continue;
    }
    packets.push_back(std::get<DecodedPacket>(std::move(decoded)));
  }
  if (reader.truncated()) out.stats.truncation_notice = reader.truncation_notice();
  out.stats.kept_packets = packets.size();

  const auto sessions = assemble(std::move(packets), options.assembler);
  out.stats.sessions = sessions.size();
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const auto uid = make_uid(capture_index, i);
    out.session_json.push_back(session_summary_json(s, uid));
    auto inspection = inspect_session(s, uid, store);
    if (inspection.malformed) ++out.stats.malformed_handshakes;
    const bool tls = inspection.conn.is_tls();
    if (tls) ++out.stats.tls_sessions;
    out.conns.push_back(inspection.conn);
    if (inspection.ssl) out.ssls.push_back(*inspection.ssl);
    if (options.encrypted_only && !tls) continue;

    ConnectionBundle bundle{inspection.conn, inspection.ssl, {}, {}};
    if (bundle.ssl) {
      for (const auto& fuid : bundle.ssl->cert_chain_fuid) {
        if (auto cert = store.find(fuid)) {
          bundle.certs.push_back(*cert);
        } else {
          bundle.missing_fuids.push_back(fuid);
        }
      }
    }
    auto features = compute_full_features(s, options.window_size);
    const auto fots = compute_fots(bundle);
    LabeledRow row;
    row.session_id = uid;
    row.features = std::move(features.values);
    row.features.insert(row.features.end(), fots.values.begin(), fots.values.end());
    const auto labelled = options.session_labels.find(uid);
    row.label = labelled == options.session_labels.end() ? options.label : labelled->second;
    row.source_dataset = options.source;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_columns(std::size_t window_size) {
  auto cols = FeatureCatalog::full().columns(window_size);
  const auto fots = fots_feature_names();
  cols.insert(cols.end(), fots.begin(), fots.end());
  return cols;
}

ExtractResult extract_features(const std::vector<std::filesystem::path>& captures, const ExtractOptions& options) {
  if (options.window_size < 1) throw UsageError("window size must be >= 1");
  CertificateStore store;
  std::vector<CaptureOutput> outputs(captures.size());
  std::vector<std::exception_ptr> errors(captures.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < captures.size(); i = next++) {
      try {
        outputs[i] = process_capture(captures[i], i, options, store);
      } catch (const Error& e) {
        const std::string what = e.what();
        errors[i] = what.find(captures[i].string()) == std::string::npos
                        ? std::make_exception_ptr(Error(e.kind(), captures[i].string() + ": " + what))
                        : std::current_exception();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, captures.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExtractResult result;
  result.dataset.columns = extract_columns(options.window_size);
  for (auto& o : outputs) {
    result.captures.push_back(std::move(o.stats));
    for (auto& r : o.rows) result.dataset.rows.push_back(std::move(r));
    for (auto& c : o.conns) result.conns.push_back(std::move(c));
    for (auto& s : o.ssls) result.ssls.push_back(std::move(s));
    for (auto& j : o.session_json) result.session_json.push_back(std::move(j));
  }
  result.certs = store.records();
  result.bad_certificates = store.bad_count();
  return result;
}

}  // namespace etd
