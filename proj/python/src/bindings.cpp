// Python bindings for the registry core. The boundary is deliberately thin:
// structured values cross as canonical JSON strings (the same encoding the
// CLI and golden files use), keys stay opaque, and the scenario runner is
// exposed whole so Python callers get byte-identical output to the C++ CLI.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "agentnet/agent_facts.hpp"
#include "agentnet/attestation.hpp"
#include "agentnet/audit.hpp"
#include "agentnet/crdt.hpp"
#include "agentnet/crypto.hpp"
#include "agentnet/dht_fabric.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/hlc.hpp"
#include "agentnet/json_io.hpp"
#include "agentnet/metrics.hpp"
#include "agentnet/scenario.hpp"

namespace py = pybind11;
using namespace agentnet;

namespace {

Bytes to_bytes(const py::bytes& data) {
  std::string s = data;
  return Bytes(s.begin(), s.end());
}

Bytes utf8_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

CapabilityDescriptor descriptor_for(const std::string& raw_path) {
  std::string canonical = normalize_capability(raw_path);
  return CapabilityDescriptor{canonical, sha256(utf8_bytes(canonical)), {}};
}

std::vector<CapabilityDescriptor> descriptors_for(const std::vector<std::string>& paths) {
  std::vector<CapabilityDescriptor> out;
  out.reserve(paths.size());
  for (const std::string& p : paths) out.push_back(descriptor_for(p));
  return out;
}

PublicKey key_from_hex(const std::string& hex) {
  Bytes raw = hex_decode(hex);
  if (raw.size() != 32) throw InvalidKey("public key must be 32 bytes");
  PublicKey pk{};
  std::copy(raw.begin(), raw.end(), pk.begin());
  return pk;
}

std::string make_record(const KeyPair& kp, const std::vector<std::string>& capabilities,
                        const std::vector<std::string>& endpoints, double trust_score,
                        uint64_t ttl_ms, int64_t now_ms) {
  HlcClock clock(derive_agent_id(kp.public_key));
  AgentFacts rec = new_record(kp, descriptors_for(capabilities), endpoints, trust_score,
                              PolicyConstraints{}, ttl_ms, clock, now_ms);
  return to_json(rec).dump();
}

std::string bump_record(const KeyPair& kp, const std::string& record_json, int64_t now_ms) {
  AgentFacts rec = record_from_json(Json::parse(record_json));
  HlcClock clock(derive_agent_id(kp.public_key));
  return to_json(bump_version(rec, kp, clock, now_ms)).dump();
}

std::vector<std::string> record_issues(const std::string& record_json) {
  AgentFacts rec = record_from_json(Json::parse(record_json));
  std::vector<std::string> out;
  for (ValidationIssue i : validate_record(rec).issues) out.emplace_back(to_string(i));
  return out;
}

std::string make_tombstone_json(const KeyPair& kp, int64_t now_ms) {
  HlcClock clock(derive_agent_id(kp.public_key));
  return to_json(make_tombstone(kp, clock, now_ms)).dump();
}

std::string record_cell(const std::string& record_json) {
  return to_json(CrdtRecord::of(record_from_json(Json::parse(record_json)))).dump();
}

std::string tombstone_cell(const std::string& tombstone_json) {
  return to_json(CrdtRecord::of(tombstone_from_json(Json::parse(tombstone_json)))).dump();
}

std::string merge_cells(const std::string& a_json, const std::string& b_json) {
  CrdtRecord a = crdt_from_json(Json::parse(a_json));
  CrdtRecord b = crdt_from_json(Json::parse(b_json));
  return to_json(crdt_merge(a, b)).dump();
}

std::string issue_token_json(const KeyPair& kp, const std::string& path, int64_t not_before_ms,
                             int64_t not_after_ms) {
  return to_json(issue_capability_token(kp, descriptor_for(path), not_before_ms, not_after_ms))
      .dump();
}

std::string check_token(const std::string& token_json, const std::string& public_key_hex,
                        int64_t now_ms) {
  CapabilityToken token = token_from_json(Json::parse(token_json));
  return to_string(verify_capability_token(token, key_from_hex(public_key_hex), now_ms));
}

std::string issue_staple_json(const KeyPair& kp, const std::string& record_json, int64_t now_ms,
                              int64_t valid_for_ms) {
  AgentFacts rec = record_from_json(Json::parse(record_json));
  return to_json(issue_staple(kp, rec.version, now_ms, valid_for_ms)).dump();
}

std::string check_staple(const std::string& staple_json, const std::string& public_key_hex,
                         int64_t now_ms) {
  RevocationStaple staple = staple_from_json(Json::parse(staple_json));
  return to_string(verify_staple(staple, key_from_hex(public_key_hex), now_ms));
}

py::dict run_scenario_json(const std::string& config_json) {
  ScenarioConfig config = config_from_json(Json::parse(config_json));
  MetricsReport rep = [&config] {
    py::gil_scoped_release release;
    return run_scenario(config);
  }();
  py::dict out;
  out["scenario"] = rep.scenario();
  out["seed"] = rep.seed();
  out["csv"] = rep.to_csv();
  out["json"] = rep.to_json().dump();
  out["all_pass"] = rep.all_pass();
  return out;
}

}  // namespace

PYBIND11_MODULE(_agentnet, m) {
  m.doc() = "Deterministic agent-registry core: records, revocation, replication fabrics "
            "and the scenario benchmark runner.";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<KeyPair>(m, "KeyPair", "Ed25519 key pair, deterministic in its 32-byte seed.")
      .def_static(
          "from_seed",
          [](const py::bytes& seed) {
            Bytes raw = to_bytes(seed);
            return generate_keypair(raw);
          },
          py::arg("seed"))
      .def_property_readonly(
          "public_key_hex", [](const KeyPair& kp) { return hex_encode(kp.public_key); })
      .def_property_readonly(
          "agent_id_hex", [](const KeyPair& kp) { return derive_agent_id(kp.public_key).hex(); });

  py::class_<AuditChain>(m, "AuditChain",
                         "Hash-chained, signed log of cross-boundary resolutions.")
      .def(py::init([](const KeyPair& resolver) { return AuditChain(resolver.public_key); }),
           py::arg("resolver"))
      .def(
          "append",
          [](AuditChain& chain, const KeyPair& resolver, int64_t timestamp_ms,
             const std::string& actor_hex, const std::string& query,
             const std::string& from_boundary, const std::string& to_boundary) {
            return chain
                .append(resolver, timestamp_ms, AgentId::from_hex(actor_hex), query,
                        from_boundary, to_boundary)
                .seq;
          },
          py::arg("resolver"), py::arg("timestamp_ms"), py::arg("actor_hex"), py::arg("query"),
          py::arg("from_boundary"), py::arg("to_boundary"))
      .def("tampered_at",
           [](const AuditChain& chain) -> std::optional<uint64_t> {
             return chain.verify_chain().tampered_at;
           })
      .def("__len__", [](const AuditChain& chain) { return chain.size(); })
      .def("to_json", [](const AuditChain& chain) { return to_json(chain).dump(); });

  // Identity and hashing.
  m.def(
      "sha256_hex", [](const py::bytes& data) { return hex_encode(sha256(to_bytes(data))); },
      py::arg("data"));
  m.def(
      "derive_agent_id",
      [](const std::string& public_key_hex) {
        return derive_agent_id(key_from_hex(public_key_hex)).hex();
      },
      py::arg("public_key_hex"));
  m.def("normalize_capability",
        [](const std::string& raw) { return normalize_capability(raw); }, py::arg("raw"));
  m.def(
      "capability_key",
      [](const std::string& path) { return capability_key(normalize_capability(path)).hex(); },
      py::arg("path"), "Hex id-space key a capability path is indexed under.");
  m.def(
      "xor_distance",
      [](const std::string& a_hex, const std::string& b_hex) {
        return hex_encode(xor_distance(AgentId::from_hex(a_hex), AgentId::from_hex(b_hex)));
      },
      py::arg("a_hex"), py::arg("b_hex"));

  // Records and replication cells (JSON in, JSON out).
  m.def("make_record", &make_record, py::arg("keypair"), py::arg("capabilities"),
        py::arg("endpoints"), py::arg("trust_score"), py::arg("ttl_ms"), py::arg("now_ms"));
  m.def("bump_record", &bump_record, py::arg("keypair"), py::arg("record_json"),
        py::arg("now_ms"));
  m.def("record_issues", &record_issues, py::arg("record_json"),
        "Names of every violated record invariant; empty means valid.");
  m.def("revoke", &make_tombstone_json, py::arg("keypair"), py::arg("now_ms"));
  m.def("record_cell", &record_cell, py::arg("record_json"));
  m.def("tombstone_cell", &tombstone_cell, py::arg("tombstone_json"));
  m.def("merge_cells", &merge_cells, py::arg("a_json"), py::arg("b_json"),
        "Last-writer-wins merge of two replication cells for the same agent.");

  // Capability tokens and liveness staples.
  m.def("issue_token", &issue_token_json, py::arg("keypair"), py::arg("path"),
        py::arg("not_before_ms"), py::arg("not_after_ms"));
  m.def("check_token", &check_token, py::arg("token_json"), py::arg("public_key_hex"),
        py::arg("now_ms"));
  m.def("issue_staple", &issue_staple_json, py::arg("keypair"), py::arg("record_json"),
        py::arg("now_ms"), py::arg("valid_for_ms"));
  m.def("check_staple", &check_staple, py::arg("staple_json"), py::arg("public_key_hex"),
        py::arg("now_ms"));

  // Benchmark scenarios.
  m.def("scenario_names", [] { return scenario_names(); });
  m.def(
      "default_config",
      [](const std::string& name) { return to_json(default_config(name)).dump(); },
      py::arg("name"));
  m.def("run_scenario", &run_scenario_json, py::arg("config_json"),
        "Run one benchmark scenario; returns scenario, seed, csv, json and all_pass.");
}
