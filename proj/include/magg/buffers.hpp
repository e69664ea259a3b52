#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "magg/message.hpp"
#include "magg/topology.hpp"

namespace magg {

struct BufferConfig {
  std::size_t buf_capacity_bytes = std::size_t{1} << 16;
  int initial_buf_num = 4;
  int reserved_buf_num = 4;
  std::size_t flush_threshold = std::size_t{1} << 15;  // thr
  std::uint64_t ini_buf = std::uint64_t{1} << 14;  // dynamic regime initial size
  double bw = 32768.0;                             // modeled bandwidth
  double bw_target = 1.0;
};

enum class BufState : std::uint8_t { free_buf, filling, in_flight };
enum class ActiveSet : std::uint8_t { initial, reserved };

/// Static send pool: initial + reserved buffer sets, one set active at a
/// time, buffers bound to a target group while they fill.
class SendBufferPool {
 public:
  struct Buf {
    std::vector<Message> entries;
    std::size_t fill = 0;  // wire bytes buffered
    BufState state = BufState::free_buf;
    bool bound = false;
    GroupId target = 0;
    std::uint64_t last_use = 0;
  };

  enum class AppendStatus { accepted, no_buffer };
  struct AppendResult {
    AppendStatus status;
    bool flush_needed = false;
    int buf_index = -1;
  };

  explicit SendBufferPool(const BufferConfig& cfg);

  AppendResult append(GroupId target_group, const Message& msg);

  /// Toggles initial/reserved. Refused while the current active set still
  /// has a buffer that could accept data.
  ActiveSet switch_active();

  /// Moves a filling buffer's contents out and marks it in_flight.
  std::vector<Message> take_for_flight(int index);
  void on_send_complete(int index);

  ActiveSet active_set() const { return active_; }
  int size() const { return static_cast<int>(bufs_.size()); }
  const Buf& buf(int index) const { return bufs_[index]; }

  /// Indices of filling buffers across both sets (for barrier flush).
  std::vector<int> filling_buffers() const;
  bool any_in_flight() const;

  std::uint64_t appended_bytes() const { return appended_bytes_; }
  std::uint64_t flushed_bytes() const { return flushed_bytes_; }
  std::uint64_t resident_bytes() const;

 private:
  int active_begin() const;
  int active_end() const;

  BufferConfig cfg_;
  std::vector<Buf> bufs_;
  ActiveSet active_ = ActiveSet::initial;
  std::uint64_t clock_ = 0;
  std::uint64_t appended_bytes_ = 0;
  std::uint64_t flushed_bytes_ = 0;
};

enum class RecvBufState : std::uint8_t { idle, receiving, draining };

/// Static receive pool: no reserved set; buffer count equals the handle
/// count (the send pool's initial_buf_num).
class RecvBufferPool {
 public:
  explicit RecvBufferPool(const BufferConfig& cfg)
      : states_(static_cast<std::size_t>(cfg.initial_buf_num), RecvBufState::idle) {}

  std::optional<int> acquire();
  void start_drain(int index);
  void release(int index);

  int size() const { return static_cast<int>(states_.size()); }
  RecvBufState state(int index) const { return states_[index]; }

 private:
  std::vector<RecvBufState> states_;
};

/// Dynamic expansion regime for two-sided traffic: total_buf grows on
/// demand and a bandwidth-ratio threshold decides when to stop gathering.
struct DynamicBufferState {
  std::uint64_t ini_buf;
  std::uint64_t cur_buf = 0;
  std::uint64_t total_buf;
  double bw;
  double bw_target;
  double bw_piwi;
  bool armed = false;  // an expansion happened since the last flush

  explicit DynamicBufferState(const BufferConfig& cfg)
      : ini_buf(cfg.ini_buf),
        total_buf(cfg.ini_buf),
        bw(cfg.bw),
        bw_target(cfg.bw_target),
        bw_piwi(static_cast<double>(cfg.ini_buf) / cfg.bw) {}

  /// Arrivals within the current headroom just accumulate; only filling
  /// past total_buf expands the allocation and re-evaluates the ratio.
  void expand(std::uint64_t incoming_segment_bytes) {
    cur_buf += incoming_segment_bytes;
    if (cur_buf > total_buf) {
      total_buf = cur_buf + ini_buf;
      bw_piwi = static_cast<double>(total_buf) / bw;
      armed = true;
    }
  }

  /// True when gathering should stop and the pending aggregate flush.
  /// Fires at most once per expansion.
  bool barrier_back() {
    if (armed && bw_piwi >= bw_target) {
      armed = false;
      return true;
    }
    return false;
  }

  void on_flush() {
    cur_buf = 0;
    armed = false;
  }

  /// Returns the expanded allocation once an epoch completes; the next
  /// epoch starts from the user-defined initial size again.
  void release_epoch() {
    cur_buf = 0;
    total_buf = ini_buf;
    bw_piwi = static_cast<double>(ini_buf) / bw;
    armed = false;
  }
};

}  // namespace magg
