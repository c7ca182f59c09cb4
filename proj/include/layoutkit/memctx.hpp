#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace layoutkit {

using MemoryContextId = std::string;

inline constexpr std::string_view kHostContext = "host";
inline constexpr std::string_view kMockDeviceContext = "mockdev";

/// Where code is currently running. Buffers may only be touched directly from
/// the execution context their memory context lives in.
enum class ExecutionContext : std::uint8_t { Host, MockDevice };

ExecutionContext current_execution_context();
std::string_view to_string(ExecutionContext exec);

/// Switches the calling thread's execution context for the scope's lifetime.
class ExecutionScope {
 public:
  explicit ExecutionScope(ExecutionContext exec);
  ~ExecutionScope();
  ExecutionScope(const ExecutionScope&) = delete;
  ExecutionScope& operator=(const ExecutionScope&) = delete;

 private:
  ExecutionContext previous_;
};

/// Runtime information attached to each allocation. "host" takes no params;
/// "mockdev" takes device_id and an optional stream.
struct ContextInfo {
  MemoryContextId context{kHostContext};
  std::map<std::string, std::int64_t, std::less<>> params;

  static ContextInfo host() { return {}; }
  static ContextInfo mockdev(std::int64_t device_id = 0, std::int64_t stream = 0);

  std::int64_t param(std::string_view key, std::int64_t fallback = 0) const;
  std::string to_string() const;

  friend bool operator==(const ContextInfo&, const ContextInfo&) = default;
};

enum class AccessMode : std::uint8_t { Read, Write };

class MemoryContext;

/// Handle to one raw allocation. Copies of a Buffer refer to the same
/// allocation; ownership is tracked by whoever deallocates it.
class Buffer {
 public:
  Buffer() = default;

  std::uint64_t handle() const { return handle_; }
  const ContextInfo& info() const { return info_; }
  std::size_t length_bytes() const { return length_; }
  bool valid() const { return handle_ != 0; }
  ExecutionContext access_tag() const;

 private:
  friend class MemoryManager;
  std::uint64_t handle_ = 0;
  ContextInfo info_;
  std::size_t length_ = 0;
  std::byte* address_ = nullptr;
  const MemoryContext* context_ = nullptr;
};

/// A way of managing memory: allocation, release and zero-fill for a given
/// ContextInfo.
class MemoryContext {
 public:
  MemoryContext(MemoryContextId id, ExecutionContext home) : id_(std::move(id)), home_(home) {}
  virtual ~MemoryContext() = default;

  const MemoryContextId& id() const { return id_; }
  ExecutionContext home_execution() const { return home_; }

  /// Throws ContextError when the params are not acceptable.
  virtual void validate(const ContextInfo& info) const = 0;
  /// Throws OutOfMemoryError on exhaustion. Never called with bytes == 0.
  virtual std::byte* allocate(const ContextInfo& info, std::size_t bytes, std::size_t alignment) = 0;
  virtual void deallocate(const ContextInfo& info, std::byte* p, std::size_t bytes, std::size_t alignment) noexcept = 0;
  virtual void fill(std::byte* p, std::uint8_t value, std::size_t count) const;
  /// Whether moving an allocation from `from` to `to` needs no data movement.
  virtual bool retags_in_place(const ContextInfo& from, const ContextInfo& to) const;

 private:
  MemoryContextId id_;
  ExecutionContext home_;
};

class HostContext final : public MemoryContext {
 public:
  HostContext() : MemoryContext(std::string(kHostContext), ExecutionContext::Host) {}
  void validate(const ContextInfo& info) const override;
  std::byte* allocate(const ContextInfo& info, std::size_t bytes, std::size_t alignment) override;
  void deallocate(const ContextInfo& info, std::byte* p, std::size_t bytes, std::size_t alignment) noexcept override;
};

/// Host memory standing in for a separate device address space: it is only
/// directly accessible from ExecutionContext::MockDevice, has a per-device
/// capacity, and charges a simulated per-byte latency on copies.
class MockDeviceContext final : public MemoryContext {
 public:
  static constexpr std::int64_t kDeviceCount = 4;

  MockDeviceContext();
  void validate(const ContextInfo& info) const override;
  std::byte* allocate(const ContextInfo& info, std::size_t bytes, std::size_t alignment) override;
  void deallocate(const ContextInfo& info, std::byte* p, std::size_t bytes, std::size_t alignment) noexcept override;
  /// Changing only the stream is a retag; changing device_id is a migration.
  bool retags_in_place(const ContextInfo& from, const ContextInfo& to) const override;

  void set_capacity(std::size_t bytes_per_device) { capacity_ = bytes_per_device; }
  std::size_t capacity() const { return capacity_; }
  std::size_t used(std::int64_t device_id) const;

  void set_latency_ns_per_byte(double ns) { latency_ns_per_byte_ = ns; }
  double latency_ns_per_byte() const { return latency_ns_per_byte_; }

 private:
  std::atomic<std::size_t> capacity_;
  std::atomic<double> latency_ns_per_byte_;
  std::atomic<std::size_t> used_[kDeviceCount] = {};
};

/// Extra knobs accepted by memcopy_with_context. `async` is accepted but the
/// copy always completes before the call returns.
struct CopyOptions {
  bool async = false;
  std::optional<double> latency_ns_per_byte;
};

/// Copy routines for one ordered (source, destination) context pair.
struct Copier {
  std::function<void(std::byte* dst, const std::byte* src, std::size_t count, const CopyOptions&)> contiguous;
  std::function<void(std::byte* dst, std::ptrdiff_t dst_stride, const std::byte* src, std::ptrdiff_t src_stride,
                     std::size_t element_size, std::size_t count, const CopyOptions&)>
      strided;
};

struct AllocationStats {
  std::uint64_t live_allocations = 0;
  std::uint64_t live_bytes = 0;
  std::uint64_t peak_bytes = 0;
  std::uint64_t total_allocations = 0;
  std::uint64_t total_deallocations = 0;
  std::uint64_t failed_allocations = 0;
};

struct CopyStats {
  std::uint64_t operations = 0;
  std::uint64_t bytes = 0;
  std::uint64_t cross_context_operations = 0;
  std::uint64_t cross_context_bytes = 0;
};

/// Process-wide registry of memory contexts, copiers and live allocations.
class MemoryManager {
 public:
  MemoryManager();
  ~MemoryManager();
  MemoryManager(const MemoryManager&) = delete;
  MemoryManager& operator=(const MemoryManager&) = delete;

  void register_context(std::unique_ptr<MemoryContext> context);
  MemoryContext& context(std::string_view id) const;
  MockDeviceContext& mockdev() const;

  void register_copier(std::string_view src, std::string_view dst, Copier copier);
  bool unregister_copier(std::string_view src, std::string_view dst);
  bool has_copier(std::string_view src, std::string_view dst) const;

  Buffer allocate(const ContextInfo& info, std::size_t length_bytes, std::size_t alignment = 64);
  void deallocate(const Buffer& buffer);
  bool is_live(const Buffer& buffer) const;

  void memset(const Buffer& buffer, std::uint8_t value, std::size_t offset, std::size_t count);

  /// Copies `count` bytes. Same-buffer overlapping ranges behave as if staged
  /// through a temporary.
  void memcopy_with_context(const Buffer& dst, std::size_t dst_offset, const Buffer& src, std::size_t src_offset,
                            std::size_t count, const CopyOptions& opts = {});
  /// Copies `count` elements of `element_size` bytes between strided
  /// positions. Overlapping same-buffer ranges go through a temporary.
  void memcopy_strided(const Buffer& dst, std::size_t dst_offset, std::ptrdiff_t dst_stride, const Buffer& src,
                       std::size_t src_offset, std::ptrdiff_t src_stride, std::size_t element_size, std::size_t count,
                       const CopyOptions& opts = {});

  /// Address of the buffer for direct element access. Throws AccessFault when
  /// the calling thread's execution context may not touch the buffer.
  std::byte* data(const Buffer& buffer, AccessMode mode) const;
  void check_access(const Buffer& buffer, AccessMode mode) const;
  static bool accessible(const MemoryContext& context, ExecutionContext exec);
  bool accessible(const ContextInfo& info, ExecutionContext exec) const;

  /// Migrates a set of buffers to `new_info`. Either retags in place or
  /// allocates, copies and frees; on failure the input buffers are untouched.
  std::vector<Buffer> update_memory_context_info(const std::vector<Buffer>& buffers, const ContextInfo& new_info,
                                                 const CopyOptions& opts = {});

  AllocationStats allocation_stats(std::string_view context) const;
  CopyStats copy_stats() const;
  void reset_copy_stats();
  std::string report() const;

  /// Test hook: the allocation after `successes` further successful ones in
  /// `context` fails with OutOfMemoryError. Negative disarms.
  void fail_allocation_after(std::string_view context, std::int64_t successes);

 private:
  struct Record {
    std::byte* address;
    std::size_t length;
    std::size_t alignment;
    ContextInfo info;
    MemoryContext* context;
  };

  const Copier& copier(const MemoryContext& src, const MemoryContext& dst) const;
  void count_copy(const MemoryContext& src, const MemoryContext& dst, std::size_t bytes);
  static void check_range(const Buffer& b, std::size_t offset, std::size_t count, const char* what);

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<MemoryContext>, std::less<>> contexts_;
  std::map<std::pair<const MemoryContext*, const MemoryContext*>, Copier> copiers_;
  std::unordered_map<std::uint64_t, Record> live_;
  std::map<std::string, AllocationStats, std::less<>> alloc_stats_;
  std::map<std::string, std::int64_t, std::less<>> fail_after_;
  std::uint64_t next_handle_ = 1;

  std::atomic<std::uint64_t> copy_ops_{0};
  std::atomic<std::uint64_t> copy_bytes_{0};
  std::atomic<std::uint64_t> cross_ops_{0};
  std::atomic<std::uint64_t> cross_bytes_{0};
};

/// The process-wide manager. Reads LAYOUTKIT_MOCKDEV_CAPACITY (bytes, with an
/// optional K/M/G suffix) and LAYOUTKIT_MOCKDEV_LATENCY_NS_PER_BYTE on first use.
MemoryManager& memory();

/// Parses "1048576", "64M", "2G" into bytes.
std::size_t parse_byte_size(std::string_view text);

}  // namespace layoutkit
