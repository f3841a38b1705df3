#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kddt {

struct RawPacket {
    std::uint64_t timestamp_us = 0;
    std::vector<std::uint8_t> payload;
    std::optional<int> label;  // 0 normal, 1 abnormal; absent for OOD data
};

enum class DatasetKind { Ood, IdTrain, IdTest };

struct LabeledDataset {
    std::vector<RawPacket> packets;
    DatasetKind kind = DatasetKind::Ood;

    std::size_t size() const { return packets.size(); }
    // Checks label presence per kind and non-decreasing timestamps.
    void validate() const;
};

// Byte-level vocabulary: PAD=0, BOS=1, EOS=2, UNK=3, then "00".."ff".
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Vocabulary();

    int size() const { return 260; }
    int byte_token(std::uint8_t b) const { return 4 + b; }
    int encode(const std::string& token) const;     // throws on unknown token
    const std::string& decode(int id) const;        // throws on out-of-range id
    bool is_special(int id) const { return id >= 0 && id < 4; }

private:
    std::vector<std::string> id_to_token_;
};

struct TokenizedPacket {
    std::vector<int> ids;  // exactly L_pkt entries
    int true_len = 0;      // tokens before padding
};

// [BOS] + one token per payload byte + [EOS], truncated to l_pkt, PAD-filled.
TokenizedPacket tokenize_packet(const RawPacket& p, const Vocabulary& vocab, int l_pkt);

// Inverse of the payload portion: byte tokens between BOS and EOS/true_len.
std::vector<std::uint8_t> detokenize_payload(const TokenizedPacket& tp, const Vocabulary& vocab);

// First floor(ratio*N) packets vs the rest, order preserved.
std::pair<LabeledDataset, LabeledDataset> chronological_split(const LabeledDataset& ds,
                                                              double ratio);

// --- PCAP (classic format, little-endian magic 0xa1b2c3d4 only) ---
std::vector<RawPacket> read_pcap(const std::string& path);
void write_pcap(const std::vector<RawPacket>& packets, const std::string& path);

// --- JSONL: {"ts_us": int, "payload_hex": str, "label": 0|1 (ID only)} ---
LabeledDataset read_jsonl(const std::string& path, DatasetKind kind);
void write_jsonl(const LabeledDataset& ds, const std::string& path);

// Sidecar anomaly windows, one {"start_us": int, "end_us": int} per line.
struct AnomalyWindow {
    std::uint64_t start_us = 0;
    std::uint64_t end_us = 0;
};
std::vector<AnomalyWindow> read_anomaly_windows(const std::string& path);
// Marks packets whose timestamp falls inside any window (inclusive).
void attach_labels(std::vector<RawPacket>& packets, const std::vector<AnomalyWindow>& windows);

// --- Synthetic TCMS-like traffic ---
struct SyntheticConfig {
    int n_packets = 20000;
    double anomaly_ratio = 0.05;          // target abnormal fraction, in (0, 0.5)
    int mean_incident_len = 50;           // geometric run-length mean, packets
    std::uint64_t mean_incident_duration_us = 50000;
    int n_signals = 8;
    std::uint64_t seed = 42;
};

// Periodic multi-signal traffic with a scheduled all-quiet phase each cycle;
// incidents force the signal bytes to 0 for a geometric-length run starting
// inside an active phase, then values rebound. Fully deterministic per seed.
LabeledDataset generate_synthetic_stream(const SyntheticConfig& cfg);

// Anomaly-free stream from the same traffic model (out-of-domain corpus).
LabeledDataset generate_synthetic_ood(int n_packets, int n_signals, std::uint64_t seed,
                                      std::uint64_t gap_us = 1000);

}  // namespace kddt
