#include <netdb.h>
#include <netinet/icmp6.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "leomap/probe.hpp"
#include "leomap/ptrmap.hpp"

namespace leomap {

namespace {

sockaddr_in6 to_sockaddr(const Ipv6Addr& addr) {
  sockaddr_in6 sa{};
  sa.sin6_family = AF_INET6;
  auto bytes = addr.to_bytes();
  std::memcpy(sa.sin6_addr.s6_addr, bytes.data(), 16);
  return sa;
}

Ipv6Addr from_in6(const in6_addr& in) {
  std::array<uint8_t, 16> bytes;
  std::memcpy(bytes.data(), in.s6_addr, 16);
  return Ipv6Addr::from_bytes(bytes);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

}  // namespace

LiveProber::LiveProber() {
  send_fd_ = ::socket(AF_INET6, SOCK_RAW, IPPROTO_ICMPV6);
  if (send_fd_ < 0)
    fail(Errc::AdapterUnavailable,
         std::string("cannot open ICMPv6 raw socket (need CAP_NET_RAW): ") +
             std::strerror(errno));
  ident_ = static_cast<uint16_t>(::getpid() & 0xffff);
}

LiveProber::~LiveProber() {
  if (send_fd_ >= 0) ::close(send_fd_);
}

std::optional<LiveProber::ProbeReply> LiveProber::probe_once(const Ipv6Addr& target,
                                                             int hop_limit,
                                                             int timeout_ms) {
  // One packet in flight per call; serialized so replies match senders.
  std::lock_guard lock(mu_);

  uint16_t seq = sequence_.fetch_add(1);
  if (::setsockopt(send_fd_, IPPROTO_IPV6, IPV6_UNICAST_HOPS, &hop_limit,
                   sizeof hop_limit) != 0)
    fail(Errc::AdapterUnavailable, "cannot set hop limit");

  struct {
    icmp6_hdr hdr;
    char payload[16];
  } packet{};
  packet.hdr.icmp6_type = ICMP6_ECHO_REQUEST;
  packet.hdr.icmp6_id = htons(ident_);
  packet.hdr.icmp6_seq = htons(seq);
  std::memcpy(packet.payload, "leomap-probe-v1", 15);

  auto dest = to_sockaddr(target);
  auto start = std::chrono::steady_clock::now();
  if (::sendto(send_fd_, &packet, sizeof packet, 0,
               reinterpret_cast<sockaddr*>(&dest), sizeof dest) < 0)
    return std::nullopt;

  char buf[1500];
  while (true) {
    double remaining = timeout_ms - elapsed_ms(start);
    if (remaining <= 0) return std::nullopt;

    pollfd pfd{send_fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (ready <= 0) return std::nullopt;

    sockaddr_in6 from{};
    socklen_t from_len = sizeof from;
    ssize_t got = ::recvfrom(send_fd_, buf, sizeof buf, 0,
                             reinterpret_cast<sockaddr*>(&from), &from_len);
    if (got < static_cast<ssize_t>(sizeof(icmp6_hdr))) continue;

    const auto* hdr = reinterpret_cast<const icmp6_hdr*>(buf);
    if (hdr->icmp6_type == ICMP6_ECHO_REPLY) {
      if (ntohs(hdr->icmp6_id) != ident_ || ntohs(hdr->icmp6_seq) != seq) continue;
      return ProbeReply{from_in6(from.sin6_addr), elapsed_ms(start), true};
    }
    if (hdr->icmp6_type == ICMP6_TIME_EXCEEDED ||
        hdr->icmp6_type == ICMP6_DST_UNREACH) {
      // The offending packet is embedded after the error header + invoking
      // IPv6 header; match our id/seq there.
      const char* inner = buf + sizeof(icmp6_hdr) + 40;
      if (got < inner - buf + static_cast<ssize_t>(sizeof(icmp6_hdr))) continue;
      const auto* inner_hdr = reinterpret_cast<const icmp6_hdr*>(inner);
      if (inner_hdr->icmp6_type != ICMP6_ECHO_REQUEST) continue;
      if (ntohs(inner_hdr->icmp6_id) != ident_ || ntohs(inner_hdr->icmp6_seq) != seq)
        continue;
      return ProbeReply{from_in6(from.sin6_addr), elapsed_ms(start), false};
    }
  }
}

EchoStatus LiveProber::echo(const Ipv6Addr& target, const ProbePolicy& policy) {
  for (int attempt = 0; attempt < policy.echo_attempts; ++attempt) {
    auto reply = probe_once(target, 64, policy.timeout_ms);
    if (reply && reply->is_echo_reply && reply->responder == target)
      return EchoStatus::Alive;
  }
  return EchoStatus::Silent;
}

TracerouteResult LiveProber::traceroute(const Ipv6Addr& target, int max_ttl,
                                        const ProbePolicy& policy) {
  if (max_ttl < 1 || max_ttl > 64)
    fail(Errc::InvalidArgument, "max_ttl must lie in [1, 64]");
  TracerouteResult result;
  result.target = target;

  for (int ttl = 1; ttl <= max_ttl; ++ttl) {
    HopObservation hop;
    hop.ttl = ttl;
    bool hit_target = false;
    for (int probe = 0; probe <= policy.retries; ++probe) {
      auto reply = probe_once(target, ttl, policy.timeout_ms);
      if (!reply || !reply->responder) continue;
      if (hop.responder && *hop.responder != *reply->responder) continue;
      hop.responder = reply->responder;
      hop.rtt_samples.push_back(reply->rtt_ms);
      if (reply->is_echo_reply && *reply->responder == target) hit_target = true;
    }
    result.hops.push_back(std::move(hop));
    if (hit_target) {
      result.reached = true;
      break;
    }
  }
  result.validate();
  return result;
}

PtrOutcome LiveProber::resolve_ptr(const Ipv6Addr& addr, const ProbePolicy&) {
  auto sa = to_sockaddr(addr);
  char host[NI_MAXHOST];
  int rc = ::getnameinfo(reinterpret_cast<sockaddr*>(&sa), sizeof sa, host, sizeof host,
                         nullptr, 0, NI_NAMEREQD);
  if (rc == 0) return {std::string(host), PtrOutcome::Reason::Found};
  if (rc == EAI_AGAIN) return {std::nullopt, PtrOutcome::Reason::Timeout};
  return {std::nullopt, PtrOutcome::Reason::NoRecord};
}

}  // namespace leomap
