#include "magg/buffers.hpp"

#include "magg/errors.hpp"

namespace magg {

SendBufferPool::SendBufferPool(const BufferConfig& cfg) : cfg_(cfg) {
  if (cfg.initial_buf_num <= 0 || cfg.reserved_buf_num <= 0 || cfg.buf_capacity_bytes == 0 ||
      cfg.flush_threshold == 0 || cfg.flush_threshold > cfg.buf_capacity_bytes) {
    throw Error("invalid buffer configuration");
  }
  bufs_.resize(static_cast<std::size_t>(cfg.initial_buf_num + cfg.reserved_buf_num));
}

int SendBufferPool::active_begin() const {
  return active_ == ActiveSet::initial ? 0 : cfg_.initial_buf_num;
}

int SendBufferPool::active_end() const {
  return active_ == ActiveSet::initial ? cfg_.initial_buf_num
                                       : cfg_.initial_buf_num + cfg_.reserved_buf_num;
}

SendBufferPool::AppendResult SendBufferPool::append(GroupId target_group, const Message& msg) {
  std::size_t wire = msg.wire_size();
  if (wire > cfg_.buf_capacity_bytes) {
    throw BufferOverflow("message larger than a whole send buffer");
  }

  // Prefer the buffer already bound to this target, as long as the
  // message still fits.
  int candidate = -1;
  for (int i = active_begin(); i < active_end(); ++i) {
    Buf& b = bufs_[i];
    if (b.state == BufState::filling && b.bound && b.target == target_group &&
        b.fill + wire <= cfg_.buf_capacity_bytes) {
      candidate = i;
      break;
    }
  }
  if (candidate < 0) {
    // Bind a free buffer, least recently used first.
    int best = -1;
    for (int i = active_begin(); i < active_end(); ++i) {
      Buf& b = bufs_[i];
      if (b.state == BufState::free_buf &&
          (best < 0 || b.last_use < bufs_[best].last_use)) {
        best = i;
      }
    }
    if (best < 0) return {AppendStatus::no_buffer, false, -1};
    Buf& b = bufs_[best];
    b.bound = true;
    b.target = target_group;
    b.state = BufState::filling;
    b.entries.clear();
    b.fill = 0;
    candidate = best;
  }

  Buf& b = bufs_[candidate];
  b.entries.push_back(msg);
  b.fill += wire;
  b.last_use = ++clock_;
  appended_bytes_ += wire;
  bool flush_needed = b.fill >= cfg_.flush_threshold;
  return {AppendStatus::accepted, flush_needed, candidate};
}

ActiveSet SendBufferPool::switch_active() {
  for (int i = active_begin(); i < active_end(); ++i) {
    const Buf& b = bufs_[i];
    if (b.state == BufState::free_buf) {
      throw SwitchWhileAvailable("active set still has a free buffer");
    }
    if (b.state == BufState::filling && b.fill < cfg_.flush_threshold) {
      throw SwitchWhileAvailable("active set still has a buffer accepting data");
    }
  }
  active_ = active_ == ActiveSet::initial ? ActiveSet::reserved : ActiveSet::initial;
  return active_;
}

std::vector<Message> SendBufferPool::take_for_flight(int index) {
  Buf& b = bufs_[index];
  if (b.state != BufState::filling || b.entries.empty()) {
    throw Error("take_for_flight on a buffer that is not filling");
  }
  b.state = BufState::in_flight;
  flushed_bytes_ += b.fill;
  std::vector<Message> out = std::move(b.entries);
  b.entries.clear();
  return out;
}

void SendBufferPool::on_send_complete(int index) {
  Buf& b = bufs_[index];
  if (b.state != BufState::in_flight) throw Error("completion for a buffer not in flight");
  b.state = BufState::free_buf;
  b.fill = 0;
  b.last_use = ++clock_;
}

std::vector<int> SendBufferPool::filling_buffers() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (bufs_[i].state == BufState::filling && !bufs_[i].entries.empty()) out.push_back(i);
  }
  return out;
}

bool SendBufferPool::any_in_flight() const {
  for (const auto& b : bufs_) {
    if (b.state == BufState::in_flight) return true;
  }
  return false;
}

std::uint64_t SendBufferPool::resident_bytes() const {
  std::uint64_t n = 0;
  for (const auto& b : bufs_) {
    if (b.state == BufState::filling) n += b.fill;
  }
  return n;
}

std::optional<int> RecvBufferPool::acquire() {
  for (int i = 0; i < size(); ++i) {
    if (states_[i] == RecvBufState::idle) {
      states_[i] = RecvBufState::receiving;
      return i;
    }
  }
  return std::nullopt;
}

void RecvBufferPool::start_drain(int index) {
  if (states_[index] != RecvBufState::receiving) throw Error("drain on a buffer not receiving");
  states_[index] = RecvBufState::draining;
}

void RecvBufferPool::release(int index) {
  if (states_[index] != RecvBufState::draining) throw Error("release on a buffer not draining");
  states_[index] = RecvBufState::idle;
}

}  // namespace magg
