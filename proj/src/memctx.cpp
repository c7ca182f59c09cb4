#include "layoutkit/memctx.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

#include "layoutkit/errors.hpp"

namespace layoutkit {

namespace {

thread_local ExecutionContext t_execution = ExecutionContext::Host;

void simulate_latency(double ns_per_byte, std::size_t bytes) {
  if (ns_per_byte <= 0.0 || bytes == 0) return;
  const auto wait = std::chrono::nanoseconds(static_cast<std::int64_t>(ns_per_byte * static_cast<double>(bytes)));
  const auto until = std::chrono::steady_clock::now() + wait;
  while (std::chrono::steady_clock::now() < until) {
  }
}

void strided_move(std::byte* dst, std::ptrdiff_t dst_stride, const std::byte* src, std::ptrdiff_t src_stride,
                  std::size_t element_size, std::size_t count) {
  if (dst_stride == src_stride && static_cast<std::size_t>(dst_stride) == element_size) {
    std::memmove(dst, src, element_size * count);
    return;
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::memcpy(dst + static_cast<std::ptrdiff_t>(i) * dst_stride, src + static_cast<std::ptrdiff_t>(i) * src_stride,
                element_size);
  }
}

Copier plain_copier(bool charges_latency) {
  Copier c;
  c.contiguous = [charges_latency](std::byte* dst, const std::byte* src, std::size_t count, const CopyOptions& o) {
    std::memmove(dst, src, count);
    if (charges_latency) {
      simulate_latency(o.latency_ns_per_byte.value_or(memory().mockdev().latency_ns_per_byte()), count);
    }
  };
  c.strided = [charges_latency](std::byte* dst, std::ptrdiff_t ds, const std::byte* src, std::ptrdiff_t ss,
                                std::size_t elem, std::size_t count, const CopyOptions& o) {
    strided_move(dst, ds, src, ss, elem, count);
    if (charges_latency) {
      simulate_latency(o.latency_ns_per_byte.value_or(memory().mockdev().latency_ns_per_byte()), elem * count);
    }
  };
  return c;
}

}  // namespace

ExecutionContext current_execution_context() { return t_execution; }

std::string_view to_string(ExecutionContext exec) {
  return exec == ExecutionContext::Host ? "host" : "mockdev";
}

ExecutionScope::ExecutionScope(ExecutionContext exec) : previous_(t_execution) { t_execution = exec; }
ExecutionScope::~ExecutionScope() { t_execution = previous_; }

ContextInfo ContextInfo::mockdev(std::int64_t device_id, std::int64_t stream) {
  ContextInfo info;
  info.context = std::string(kMockDeviceContext);
  info.params["device_id"] = device_id;
  if (stream != 0) info.params["stream"] = stream;
  return info;
}

std::int64_t ContextInfo::param(std::string_view key, std::int64_t fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string ContextInfo::to_string() const {
  std::string out = context;
  if (!params.empty()) {
    out += '{';
    bool first = true;
    for (const auto& [k, v] : params) {
      if (!first) out += ',';
      first = false;
      out += k + ':' + std::to_string(v);
    }
    out += '}';
  }
  return out;
}

ExecutionContext Buffer::access_tag() const {
  return context_ == nullptr ? ExecutionContext::Host : context_->home_execution();
}

void MemoryContext::fill(std::byte* p, std::uint8_t value, std::size_t count) const { std::memset(p, value, count); }

bool MemoryContext::retags_in_place(const ContextInfo& from, const ContextInfo& to) const { return from == to; }

void HostContext::validate(const ContextInfo& info) const {
  if (!info.params.empty()) throw ContextError("host context takes no parameters, got " + info.to_string());
}

std::byte* HostContext::allocate(const ContextInfo&, std::size_t bytes, std::size_t alignment) {
  try {
    return static_cast<std::byte*>(::operator new(bytes, std::align_val_t{alignment}));
  } catch (const std::bad_alloc&) {
    throw OutOfMemoryError("host allocation of " + std::to_string(bytes) + " bytes failed");
  }
}

void HostContext::deallocate(const ContextInfo&, std::byte* p, std::size_t, std::size_t alignment) noexcept {
  ::operator delete(p, std::align_val_t{alignment});
}

MockDeviceContext::MockDeviceContext()
    : MemoryContext(std::string(kMockDeviceContext), ExecutionContext::MockDevice),
      capacity_(std::size_t{4} << 30),
      latency_ns_per_byte_(0.0) {}

void MockDeviceContext::validate(const ContextInfo& info) const {
  for (const auto& [key, value] : info.params) {
    if (key != "device_id" && key != "stream") {
      throw ContextError("mockdev: unknown parameter '" + key + "'");
    }
  }
  auto device = info.param("device_id", -1);
  if (device < 0 || device >= kDeviceCount) {
    throw ContextError("mockdev: device_id must be in [0, " + std::to_string(kDeviceCount) + "), got " +
                       info.to_string());
  }
  if (info.param("stream") < 0) throw ContextError("mockdev: stream must be non-negative");
}

std::byte* MockDeviceContext::allocate(const ContextInfo& info, std::size_t bytes, std::size_t alignment) {
  auto& used = used_[info.param("device_id")];
  std::size_t current = used.load();
  do {
    if (bytes > capacity_.load() || current > capacity_.load() - bytes) {
      throw OutOfMemoryError("mockdev: device " + std::to_string(info.param("device_id")) + " out of memory (" +
                             std::to_string(current) + " used + " + std::to_string(bytes) + " requested > " +
                             std::to_string(capacity_.load()) + ")");
    }
  } while (!used.compare_exchange_weak(current, current + bytes));
  try {
    return static_cast<std::byte*>(::operator new(bytes, std::align_val_t{alignment}));
  } catch (const std::bad_alloc&) {
    used -= bytes;
    throw OutOfMemoryError("mockdev: backing allocation failed");
  }
}

void MockDeviceContext::deallocate(const ContextInfo& info, std::byte* p, std::size_t bytes,
                                   std::size_t alignment) noexcept {
  ::operator delete(p, std::align_val_t{alignment});
  used_[info.param("device_id")] -= bytes;
}

bool MockDeviceContext::retags_in_place(const ContextInfo& from, const ContextInfo& to) const {
  return from.context == to.context && from.param("device_id") == to.param("device_id");
}

std::size_t MockDeviceContext::used(std::int64_t device_id) const { return used_[device_id].load(); }

MemoryManager::MemoryManager() {
  register_context(std::make_unique<HostContext>());
  register_context(std::make_unique<MockDeviceContext>());
  register_copier(kHostContext, kHostContext, plain_copier(false));
  register_copier(kHostContext, kMockDeviceContext, plain_copier(true));
  register_copier(kMockDeviceContext, kHostContext, plain_copier(true));
  register_copier(kMockDeviceContext, kMockDeviceContext, plain_copier(true));
}

MemoryManager::~MemoryManager() = default;

void MemoryManager::register_context(std::unique_ptr<MemoryContext> ctx) {
  std::unique_lock lock(mutex_);
  const std::string id = ctx->id();
  if (contexts_.contains(id)) throw ContextError("memory context '" + id + "' already registered");
  contexts_.emplace(id, std::move(ctx));
  alloc_stats_[id];
}

MemoryContext& MemoryManager::context(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = contexts_.find(id);
  if (it == contexts_.end()) throw ContextError("unknown memory context '" + std::string(id) + "'");
  return *it->second;
}

MockDeviceContext& MemoryManager::mockdev() const {
  return static_cast<MockDeviceContext&>(context(kMockDeviceContext));
}

void MemoryManager::register_copier(std::string_view src, std::string_view dst, Copier c) {
  const MemoryContext* s = &context(src);
  const MemoryContext* d = &context(dst);
  std::unique_lock lock(mutex_);
  if (copiers_.contains({s, d})) {
    throw ContextError("copier " + std::string(src) + " -> " + std::string(dst) + " already registered");
  }
  copiers_.emplace(std::make_pair(s, d), std::move(c));
}

bool MemoryManager::unregister_copier(std::string_view src, std::string_view dst) {
  const MemoryContext* s = &context(src);
  const MemoryContext* d = &context(dst);
  std::unique_lock lock(mutex_);
  return copiers_.erase({s, d}) > 0;
}

bool MemoryManager::has_copier(std::string_view src, std::string_view dst) const {
  const MemoryContext* s = &context(src);
  const MemoryContext* d = &context(dst);
  std::shared_lock lock(mutex_);
  return copiers_.contains({s, d});
}

const Copier& MemoryManager::copier(const MemoryContext& src, const MemoryContext& dst) const {
  std::shared_lock lock(mutex_);
  auto it = copiers_.find({&src, &dst});
  if (it == copiers_.end()) throw ContextError("no copier registered for " + src.id() + " -> " + dst.id());
  return it->second;
}

Buffer MemoryManager::allocate(const ContextInfo& info, std::size_t length_bytes, std::size_t alignment) {
  if (alignment == 0 || (alignment & (alignment - 1)) != 0) {
    throw ContextError("alignment must be a power of two, got " + std::to_string(alignment));
  }
  MemoryContext& ctx = context(info.context);
  ctx.validate(info);
  {
    std::unique_lock lock(mutex_);
    auto it = fail_after_.find(info.context);
    if (it != fail_after_.end() && it->second >= 0) {
      if (it->second == 0) {
        fail_after_.erase(it);
        ++alloc_stats_[info.context].failed_allocations;
        throw OutOfMemoryError("injected allocation failure in context '" + info.context + "'");
      }
      --it->second;
    }
  }
  std::byte* address = nullptr;
  if (length_bytes > 0) {
    try {
      address = ctx.allocate(info, length_bytes, alignment);
    } catch (const OutOfMemoryError&) {
      std::unique_lock lock(mutex_);
      ++alloc_stats_[info.context].failed_allocations;
      throw;
    }
  }
  Buffer b;
  b.info_ = info;
  b.length_ = length_bytes;
  b.address_ = address;
  b.context_ = &ctx;
  std::unique_lock lock(mutex_);
  b.handle_ = next_handle_++;
  live_.emplace(b.handle_, Record{address, length_bytes, alignment, info, &ctx});
  auto& s = alloc_stats_[info.context];
  ++s.live_allocations;
  ++s.total_allocations;
  s.live_bytes += length_bytes;
  s.peak_bytes = std::max(s.peak_bytes, s.live_bytes);
  return b;
}

void MemoryManager::deallocate(const Buffer& buffer) {
  Record rec;
  {
    std::unique_lock lock(mutex_);
    auto it = live_.find(buffer.handle_);
    if (it == live_.end()) {
      throw ContextError(buffer.handle_ == 0 || buffer.handle_ >= next_handle_
                             ? "deallocate: foreign buffer handle " + std::to_string(buffer.handle_)
                             : "deallocate: double free of buffer " + std::to_string(buffer.handle_));
    }
    if (it->second.address != buffer.address_) {
      throw ContextError("deallocate: foreign buffer handle " + std::to_string(buffer.handle_));
    }
    rec = std::move(it->second);
    live_.erase(it);
    auto& s = alloc_stats_[rec.info.context];
    --s.live_allocations;
    ++s.total_deallocations;
    s.live_bytes -= rec.length;
  }
  if (rec.address != nullptr) rec.context->deallocate(rec.info, rec.address, rec.length, rec.alignment);
}

bool MemoryManager::is_live(const Buffer& buffer) const {
  std::shared_lock lock(mutex_);
  return live_.contains(buffer.handle_);
}

void MemoryManager::check_range(const Buffer& b, std::size_t offset, std::size_t count, const char* what) {
  if (offset > b.length_ || count > b.length_ - offset) {
    throw RangeError(std::string(what) + ": range [" + std::to_string(offset) + ", " + std::to_string(offset) + "+" +
                     std::to_string(count) + ") exceeds buffer of " + std::to_string(b.length_) + " bytes");
  }
}

void MemoryManager::memset(const Buffer& buffer, std::uint8_t value, std::size_t offset, std::size_t count) {
  check_range(buffer, offset, count, "memset");
  if (count == 0) return;
  buffer.context_->fill(buffer.address_ + offset, value, count);
}

void MemoryManager::count_copy(const MemoryContext& src, const MemoryContext& dst, std::size_t bytes) {
  copy_ops_.fetch_add(1, std::memory_order_relaxed);
  copy_bytes_.fetch_add(bytes, std::memory_order_relaxed);
  if (&src != &dst) {
    cross_ops_.fetch_add(1, std::memory_order_relaxed);
    cross_bytes_.fetch_add(bytes, std::memory_order_relaxed);
  }
}

void MemoryManager::memcopy_with_context(const Buffer& dst, std::size_t dst_offset, const Buffer& src,
                                         std::size_t src_offset, std::size_t count, const CopyOptions& opts) {
  if (count == 0) return;
  check_range(dst, dst_offset, count, "memcopy_with_context (destination)");
  check_range(src, src_offset, count, "memcopy_with_context (source)");
  const Copier& c = copier(*src.context_, *dst.context_);
  c.contiguous(dst.address_ + dst_offset, src.address_ + src_offset, count, opts);
  count_copy(*src.context_, *dst.context_, count);
}

void MemoryManager::memcopy_strided(const Buffer& dst, std::size_t dst_offset, std::ptrdiff_t dst_stride,
                                    const Buffer& src, std::size_t src_offset, std::ptrdiff_t src_stride,
                                    std::size_t element_size, std::size_t count, const CopyOptions& opts) {
  if (count == 0) return;
  if (dst_stride < 0 || src_stride < 0) throw RangeError("memcopy_strided: negative stride");
  auto span = [&](std::ptrdiff_t stride) { return static_cast<std::size_t>(stride) * (count - 1) + element_size; };
  check_range(dst, dst_offset, span(dst_stride), "memcopy_strided (destination)");
  check_range(src, src_offset, span(src_stride), "memcopy_strided (source)");
  const Copier& c = copier(*src.context_, *dst.context_);
  std::byte* d = dst.address_ + dst_offset;
  const std::byte* s = src.address_ + src_offset;
  const bool overlap = dst.address_ == src.address_ && d < s + span(src_stride) && s < d + span(dst_stride);
  if (overlap && !(dst_stride == src_stride && static_cast<std::size_t>(dst_stride) == element_size)) {
    std::vector<std::byte> tmp(element_size * count);
    strided_move(tmp.data(), static_cast<std::ptrdiff_t>(element_size), s, src_stride, element_size, count);
    c.strided(d, dst_stride, tmp.data(), static_cast<std::ptrdiff_t>(element_size), element_size, count, opts);
  } else {
    c.strided(d, dst_stride, s, src_stride, element_size, count, opts);
  }
  count_copy(*src.context_, *dst.context_, element_size * count);
}

bool MemoryManager::accessible(const MemoryContext& ctx, ExecutionContext exec) { return ctx.home_execution() == exec; }

bool MemoryManager::accessible(const ContextInfo& info, ExecutionContext exec) const {
  return accessible(context(info.context), exec);
}

void MemoryManager::check_access(const Buffer& buffer, AccessMode mode) const {
  const ExecutionContext exec = current_execution_context();
  if (buffer.context_ != nullptr && !accessible(*buffer.context_, exec)) {
    throw AccessFault(std::string(mode == AccessMode::Read ? "read" : "write") + " of " + buffer.info_.to_string() +
                      " buffer " + std::to_string(buffer.handle_) + " from " + std::string(to_string(exec)) +
                      " execution context");
  }
}

std::byte* MemoryManager::data(const Buffer& buffer, AccessMode mode) const {
  check_access(buffer, mode);
  return buffer.address_;
}

std::vector<Buffer> MemoryManager::update_memory_context_info(const std::vector<Buffer>& buffers,
                                                              const ContextInfo& new_info, const CopyOptions& opts) {
  MemoryContext& target = context(new_info.context);
  target.validate(new_info);

  bool in_place = true;
  for (const auto& b : buffers) {
    in_place = in_place && b.context_ == &target && target.retags_in_place(b.info_, new_info);
  }
  if (in_place) {
    std::vector<Buffer> out = buffers;
    std::unique_lock lock(mutex_);
    for (auto& b : out) {
      b.info_ = new_info;
      auto it = live_.find(b.handle_);
      if (it != live_.end()) it->second.info = new_info;
    }
    return out;
  }

  std::vector<Buffer> fresh;
  fresh.reserve(buffers.size());
  try {
    for (const auto& b : buffers) {
      std::size_t alignment = 64;
      {
        std::shared_lock lock(mutex_);
        auto it = live_.find(b.handle_);
        if (it != live_.end()) alignment = it->second.alignment;
      }
      fresh.push_back(allocate(new_info, b.length_, alignment));
    }
    for (std::size_t i = 0; i < buffers.size(); ++i) {
      memcopy_with_context(fresh[i], 0, buffers[i], 0, buffers[i].length_, opts);
    }
  } catch (...) {
    for (const auto& f : fresh) deallocate(f);
    throw;
  }
  for (const auto& b : buffers) deallocate(b);
  return fresh;
}

AllocationStats MemoryManager::allocation_stats(std::string_view ctx) const {
  std::shared_lock lock(mutex_);
  auto it = alloc_stats_.find(ctx);
  if (it == alloc_stats_.end()) throw ContextError("unknown memory context '" + std::string(ctx) + "'");
  return it->second;
}

CopyStats MemoryManager::copy_stats() const {
  return {copy_ops_.load(), copy_bytes_.load(), cross_ops_.load(), cross_bytes_.load()};
}

void MemoryManager::reset_copy_stats() {
  copy_ops_ = 0;
  copy_bytes_ = 0;
  cross_ops_ = 0;
  cross_bytes_ = 0;
}

std::string MemoryManager::report() const {
  std::ostringstream os;
  std::shared_lock lock(mutex_);
  os << "context    live  live_bytes  peak_bytes  allocs  frees  failed\n";
  for (const auto& [id, s] : alloc_stats_) {
    os << id << std::string(id.size() < 10 ? 10 - id.size() : 1, ' ') << s.live_allocations << "  " << s.live_bytes
       << "  " << s.peak_bytes << "  " << s.total_allocations << "  " << s.total_deallocations << "  "
       << s.failed_allocations << '\n';
  }
  os << "copies " << copy_ops_.load() << " bytes " << copy_bytes_.load() << " cross_context_copies "
     << cross_ops_.load() << " cross_context_bytes " << cross_bytes_.load() << '\n';
  return os.str();
}

void MemoryManager::fail_allocation_after(std::string_view ctx, std::int64_t successes) {
  std::unique_lock lock(mutex_);
  if (successes < 0) {
    fail_after_.erase(std::string(ctx));
  } else {
    fail_after_[std::string(ctx)] = successes;
  }
}

std::size_t parse_byte_size(std::string_view text) {
  if (text.empty()) throw ContextError("empty byte size");
  std::size_t multiplier = 1;
  switch (text.back()) {
    case 'k': case 'K': multiplier = std::size_t{1} << 10; break;
    case 'm': case 'M': multiplier = std::size_t{1} << 20; break;
    case 'g': case 'G': multiplier = std::size_t{1} << 30; break;
    default: break;
  }
  if (multiplier != 1) text.remove_suffix(1);
  std::size_t value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw ContextError("invalid byte size '" + std::string(text) + "'");
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value * multiplier;
}

MemoryManager& memory() {
  static MemoryManager* manager = [] {
    auto* m = new MemoryManager();
    if (const char* cap = std::getenv("LAYOUTKIT_MOCKDEV_CAPACITY")) m->mockdev().set_capacity(parse_byte_size(cap));
    if (const char* lat = std::getenv("LAYOUTKIT_MOCKDEV_LATENCY_NS_PER_BYTE")) {
      m->mockdev().set_latency_ns_per_byte(std::strtod(lat, nullptr));
    }
    return m;
  }();
  return *manager;
}

}  // namespace layoutkit
