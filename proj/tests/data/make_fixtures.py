#!/usr/bin/env python3
# Regenerates the capture fixtures and their expected values. scapy dissects
# every written frame again, and the expected feature values are computed
# here from the packet lists, independently of the C++ code.
import datetime
import hashlib
import json
import os
import struct
from decimal import Decimal

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.x509.oid import NameOID
from scapy.all import ARP, DNS, DNSQR, ICMP, IP, TCP, UDP, Dot1Q, Ether, IPv6, IPv6ExtHdrHopByHop, Raw
from scapy.utils import PcapNgWriter, rdpcap, wrpcap

HERE = os.path.dirname(os.path.abspath(__file__))
BASE = Decimal("1700000000")
CLIENT_MAC = "02:00:00:00:00:01"
SERVER_MAC = "02:00:00:00:00:02"


def der_of(cert):
    return cert.public_bytes(serialization.Encoding.DER)


def make_cert(cn, sans, key_bits, issuer=None, days=365, start=datetime.datetime(2023, 1, 1)):
    key = rsa.generate_private_key(public_exponent=65537, key_size=key_bits)
    subject = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, cn)])
    issuer_name = issuer[0].subject if issuer else subject
    signer = issuer[1] if issuer else key
    b = (x509.CertificateBuilder().subject_name(subject).issuer_name(issuer_name).public_key(key.public_key())
         .serial_number(x509.random_serial_number()).not_valid_before(start)
         .not_valid_after(start + datetime.timedelta(days=days)))
    if sans:
        b = b.add_extension(x509.SubjectAlternativeName([x509.DNSName(s) for s in sans]), critical=False)
    cert = b.sign(signer, hashes.SHA256())
    return cert, key


def cert_expect(cert):
    der = der_of(cert)
    try:
        sans = cert.extensions.get_extension_for_class(x509.SubjectAlternativeName).value.get_values_for_type(x509.DNSName)
    except x509.ExtensionNotFound:
        sans = []
    cns = cert.subject.get_attributes_for_oid(NameOID.COMMON_NAME)
    nb = int(cert.not_valid_before_utc.timestamp())
    na = int(cert.not_valid_after_utc.timestamp())
    return {
        "fuid": "F" + hashlib.sha256(der).hexdigest()[:32],
        "subject_cn": cns[0].value if cns else None,
        "san_dns": list(sans),
        "not_before": nb,
        "not_after": na,
        "validity_s": na - nb,
        "public_key_bits": cert.public_key().key_size,
        "self_signed": cert.subject == cert.issuer,
    }


# TLS wire helpers
def u8(v): return struct.pack("!B", v)
def u16(v): return struct.pack("!H", v)
def u24(v): return struct.pack("!I", v)[1:]


def record(ctype, body, version=0x0303):
    return u8(ctype) + u16(version) + u16(len(body)) + body


def handshake(mtype, body):
    return u8(mtype) + u24(len(body)) + body


def ext(etype, body):
    return u16(etype) + u16(len(body)) + body


def client_hello(sni=None, ciphers=(0xC02F, 0xC030, 0x009E), session_id=b"", versions=None, psk=False):
    exts = b""
    if sni:
        name = sni.encode()
        entry = u8(0) + u16(len(name)) + name
        exts += ext(0, u16(len(entry)) + entry)
    if versions:
        vs = b"".join(u16(v) for v in versions)
        exts += ext(43, u8(len(vs)) + vs)
    if psk:
        ident = u16(4) + b"tick" + struct.pack("!I", 0)
        binder = u8(32) + bytes(32)
        exts += ext(41, u16(len(ident)) + ident + u16(len(binder)) + binder)
    cs = b"".join(u16(c) for c in ciphers)
    body = u16(0x0303) + bytes(range(32)) + u8(len(session_id)) + session_id + u16(len(cs)) + cs + u8(1) + u8(0)
    body += u16(len(exts)) + exts
    return handshake(1, body)


def server_hello(cipher, session_id=b"", version=None):
    exts = ext(43, u16(version)) if version else b""
    body = u16(0x0303) + bytes(range(32, 64)) + u8(len(session_id)) + session_id + u16(cipher) + u8(0)
    body += u16(len(exts)) + exts
    return handshake(2, body)


def certificate(ders):
    chain = b"".join(u24(len(d)) + d for d in ders)
    return handshake(11, u24(len(chain)) + chain)


SERVER_HELLO_DONE = handshake(14, b"")
CCS = record(20, b"\x01")


def app_data(n, seed):
    return record(23, bytes((seed + i) % 256 for i in range(n)))


class Conversation:
    """TCP conversation with tracked sequence numbers; frames appended to `out`."""

    def __init__(self, out, client, server, cport, sport, t0, ipv6=False, vlan=None, ttl_c=64, ttl_s=57):
        self.out, self.client, self.server = out, client, server
        self.cport, self.sport, self.t = cport, sport, Decimal(t0)
        self.ipv6, self.vlan = ipv6, vlan
        self.seq = {"c": 1000, "s": 5000}
        self.ttl = {"c": ttl_c, "s": ttl_s}
        self.win = {"c": 64240, "s": 65160}
        self.packets = []  # (time, direction, ip_length, payload_length)

    def _send(self, who, flags, payload=b"", dt="0.010"):
        self.t += Decimal(dt)
        src, dst = (self.client, self.server) if who == "c" else (self.server, self.client)
        sp, dp = (self.cport, self.sport) if who == "c" else (self.sport, self.cport)
        other = "s" if who == "c" else "c"
        tcp = TCP(sport=sp, dport=dp, flags=flags, seq=self.seq[who], ack=self.seq[other], window=self.win[who])
        if self.ipv6:
            ip = IPv6(src=src, dst=dst, hlim=self.ttl[who])
        else:
            ip = IP(src=src, dst=dst, ttl=self.ttl[who])
        l3 = ip / tcp / Raw(payload) if payload else ip / tcp
        eth = Ether(src=CLIENT_MAC if who == "c" else SERVER_MAC, dst=SERVER_MAC if who == "c" else CLIENT_MAC)
        frame = eth / Dot1Q(vlan=self.vlan) / l3 if self.vlan is not None else eth / l3
        frame.time = self.t
        self.out.append(frame)
        ip_len = len(bytes(l3))
        self.packets.append((self.t, "fwd" if who == "c" else "bwd", ip_len, len(payload)))
        self.seq[who] += len(payload) + (1 if ("S" in flags or "F" in flags) else 0)

    def open(self):
        self._send("c", "S", dt="0")
        self._send("s", "SA", dt="0.020")
        self._send("c", "A", dt="0.001")

    def data(self, who, payload, dt="0.010"):
        self._send(who, "PA", payload, dt)

    def close(self):
        self._send("c", "FA", dt="0.030")
        self._send("s", "FA", dt="0.002")
        self._send("c", "A", dt="0.001")

    def reset(self, who="s"):
        self._send(who, "R", dt="0.005")


def hand_features(packets):
    times = [p[0] for p in packets]
    lens = [p[2] for p in packets]
    duration = float(max(times) - min(times))
    total_ip = sum(lens)
    return {
        "flow_duration": duration,
        "total_fwd_payload": float(sum(p[3] for p in packets if p[1] == "fwd")),
        "total_payload": float(sum(p[3] for p in packets)),
        "ipratio": max(lens) / min(lens),
        "goodput": total_ip / duration if duration > 0 else 0.0,
        "packet_count": float(len(packets)),
    }


def build_ten_sessions():
    frames, sessions = [], []
    ca, ca_key = make_cert("Fixture Root CA", [], 2048, days=3650)
    leaf, _ = make_cert("www.example.com", ["www.example.com", "example.com"], 2048, issuer=(ca, ca_key))
    self_signed, _ = make_cert("selfsigned.local", ["selfsigned.local"], 1024, days=30)
    alt_leaf, _ = make_cert("shop.example.net", ["shop.example.net", "*.example.net"], 2048, issuer=(ca, ca_key))
    certs = {"ca": ca, "leaf": leaf, "self": self_signed, "alt": alt_leaf}

    def session(name, conv, tls, **extra):
        sessions.append({"name": name, "conv": conv, "tls": tls, **extra})

    # 1: TLS 1.2, full handshake with a two-certificate chain
    c = Conversation(frames, "10.0.0.2", "93.184.216.34", 50001, 443, BASE + Decimal("0.000"))
    c.open()
    c.data("c", record(22, client_hello("www.example.com"), version=0x0301))
    c.data("s", record(22, server_hello(0xC02F) + certificate([der_of(leaf), der_of(ca)]) + SERVER_HELLO_DONE), "0.040")
    c.data("c", record(22, handshake(16, bytes(70))) + CCS + record(22, bytes(40)))
    c.data("s", CCS + record(22, bytes(40)))
    c.data("c", app_data(300, 1))
    c.data("s", app_data(1200, 2), "0.050")
    c.close()
    session("tls12_chain", c, True, sni="www.example.com", version="TLSv12", cipher=0xC02F,
            certs=["leaf", "ca"], resumed=False)

    # 2: TLS 1.3 negotiated via supported_versions; certificates are encrypted
    c = Conversation(frames, "10.0.0.2", "151.101.1.69", 50002, 443, BASE + Decimal("0.100"))
    c.open()
    c.data("c", record(22, client_hello("api.example.org", ciphers=(0x1301, 0x1302, 0x1303), versions=[0x0304, 0x0303]),
                       version=0x0301))
    c.data("s", record(22, server_hello(0x1301, version=0x0304)) + CCS + app_data(900, 3), "0.030")
    c.data("c", CCS + app_data(60, 4))
    c.data("c", app_data(200, 5))
    c.data("s", app_data(4000 % 1400, 6))
    c.close()
    session("tls13", c, True, sni="api.example.org", version="TLSv13", cipher=0x1301, certs=[], resumed=False)

    # 3: TLS 1.2 abbreviated handshake (session id echoed)
    sid = bytes(range(100, 132))
    c = Conversation(frames, "10.0.0.3", "93.184.216.34", 50003, 443, BASE + Decimal("0.200"))
    c.open()
    c.data("c", record(22, client_hello("www.example.com", session_id=sid)))
    c.data("s", record(22, server_hello(0xC030, session_id=sid)) + CCS + record(22, bytes(40)), "0.025")
    c.data("c", CCS + record(22, bytes(40)))
    c.data("c", app_data(500, 7))
    c.close()
    session("tls12_resumed", c, True, sni="www.example.com", version="TLSv12", cipher=0xC030, certs=[], resumed=True)

    # 4: self-signed certificate, SNI not covered, VLAN-tagged
    c = Conversation(frames, "10.0.0.4", "203.0.113.9", 50004, 443, BASE + Decimal("0.300"), vlan=42)
    c.open()
    c.data("c", record(22, client_hello("mismatch.test")))
    c.data("s", record(22, server_hello(0x009E) + certificate([der_of(self_signed)]) + SERVER_HELLO_DONE))
    c.data("c", app_data(100, 8))
    c.reset("c")
    session("tls12_selfsigned_vlan", c, True, sni="mismatch.test", version="TLSv12", cipher=0x009E, certs=["self"],
            resumed=False)

    # 5: IPv6 on a non-standard port
    c = Conversation(frames, "2001:db8::2", "2001:db8::443", 50005, 8443, BASE + Decimal("0.400"), ipv6=True)
    c.open()
    c.data("c", record(22, client_hello("shop.example.net")))
    c.data("s", record(22, server_hello(0xC02F) + certificate([der_of(alt_leaf)]) + SERVER_HELLO_DONE))
    c.data("c", app_data(64, 9))
    c.close()
    session("tls12_ipv6", c, True, sni="shop.example.net", version="TLSv12", cipher=0xC02F, certs=["alt"],
            resumed=False)

    # 6: ServerHello + Certificate record split across three TCP segments
    c = Conversation(frames, "10.0.0.6", "198.51.100.7", 50006, 443, BASE + Decimal("0.500"))
    c.open()
    c.data("c", record(22, client_hello("www.example.com")))
    flight = record(22, server_hello(0xC02F) + certificate([der_of(leaf), der_of(ca)]) + SERVER_HELLO_DONE)
    third = len(flight) // 3
    c.data("s", flight[:third])
    c.data("s", flight[third:2 * third], "0.001")
    c.data("s", flight[2 * third:], "0.001")
    c.data("c", app_data(80, 10))
    c.close()
    session("tls12_split", c, True, sni="www.example.com", version="TLSv12", cipher=0xC02F, certs=["leaf", "ca"],
            resumed=False)

    # 7: plaintext HTTP
    c = Conversation(frames, "10.0.0.7", "192.0.2.80", 50007, 80, BASE + Decimal("0.600"))
    c.open()
    c.data("c", b"GET / HTTP/1.1\r\nHost: example.com\r\n\r\n")
    c.data("s", b"HTTP/1.1 200 OK\r\nContent-Length: 5\r\n\r\nhello", "0.030")
    c.close()
    session("http", c, False)

    # 8: SSH banner exchange
    c = Conversation(frames, "10.0.0.8", "192.0.2.22", 50008, 22, BASE + Decimal("0.700"))
    c.open()
    c.data("s", b"SSH-2.0-OpenSSH_9.0\r\n")
    c.data("c", b"SSH-2.0-client\r\n")
    c.close()
    session("ssh", c, False)

    # 9: plaintext on port 443
    c = Conversation(frames, "10.0.0.9", "192.0.2.43", 50009, 443, BASE + Decimal("0.800"))
    c.open()
    c.data("c", b"GET /not-tls HTTP/1.1\r\n\r\n")
    c.reset("s")
    session("plaintext_443", c, False)

    # 10: connection refused
    c = Conversation(frames, "10.0.0.10", "192.0.2.44", 50010, 443, BASE + Decimal("0.900"))
    c._send("c", "S", dt="0")
    c._send("s", "RA", dt="0.001")
    session("refused", c, False)

    # Noise removed by the relevance filter
    noise = [
        Ether(src=CLIENT_MAC, dst="ff:ff:ff:ff:ff:ff") / ARP(psrc="10.0.0.2", pdst="10.0.0.1"),
        Ether(src=CLIENT_MAC, dst=SERVER_MAC) / IP(src="10.0.0.2", dst="10.0.0.1") / ICMP(),
        Ether(src=CLIENT_MAC, dst=SERVER_MAC) / IP(src="10.0.0.2", dst="10.0.0.53") / UDP(sport=53000, dport=53)
        / DNS(rd=1, qd=DNSQR(qname="example.com")),
    ]
    for i, n in enumerate(noise):
        n.time = BASE + Decimal("0.050") + Decimal(i) / 1000
        frames.append(n)

    frames.sort(key=lambda f: f.time)
    return frames, sessions, certs


def dissect(frame):
    """scapy's view of a frame, in the decoder's terms."""
    out = {"time_us": int(Decimal(frame.time) * 1000000)}
    if IP in frame:
        ip = frame[IP]
        out.update(ip_version=4, src=ip.src, dst=ip.dst, protocol=ip.proto, ip_length=ip.len, ip_header_length=ip.ihl * 4,
                   ttl=ip.ttl)
    elif IPv6 in frame:
        ip = frame[IPv6]
        out.update(ip_version=6, src=ip.src, dst=ip.dst, ip_length=ip.plen + 40, ttl=ip.hlim)
        hdr = 40
        layer = ip.payload
        nh = ip.nh
        while isinstance(layer, IPv6ExtHdrHopByHop):
            hdr += len(bytes(layer)) - len(bytes(layer.payload))
            nh = layer.nh
            layer = layer.payload
        out.update(protocol=nh, ip_header_length=hdr)
    else:
        out["network"] = None
        return out
    if TCP in frame:
        t = frame[TCP]
        out.update(sport=t.sport, dport=t.dport, seq=t.seq, flags=int(t.flags), window=t.window,
                   tcp_header_length=t.dataofs * 4, payload_length=len(bytes(t.payload)))
    elif UDP in frame:
        u = frame[UDP]
        out.update(sport=u.sport, dport=u.dport, payload_length=u.len - 8)
    return out


def mixed_frames():
    t = BASE
    frames = [
        Ether() / IP(src="192.168.1.1", dst="192.168.1.2", ttl=12) / TCP(sport=1234, dport=443, flags="S", window=1000),
        Ether() / Dot1Q(vlan=5) / IP(src="192.168.1.2", dst="192.168.1.1") / TCP(sport=443, dport=1234, flags="SA") / Raw(b"x" * 33),
        Ether() / Dot1Q(vlan=5) / Dot1Q(vlan=6) / IP(src="192.168.1.3", dst="192.168.1.4", options=b"\x01\x01\x01\x00")
        / TCP(sport=1, dport=2, options=[("MSS", 1460), ("NOP", None), ("WScale", 7)]) / Raw(b"abc"),
        Ether() / IPv6(src="fe80::1", dst="fe80::2", hlim=3) / TCP(sport=5555, dport=80, flags="PA") / Raw(b"hello"),
        Ether() / IPv6(src="fe80::1", dst="fe80::2") / IPv6ExtHdrHopByHop() / UDP(sport=546, dport=547) / Raw(b"dhcp"),
        Ether() / IP(src="10.1.1.1", dst="10.1.1.2") / UDP(sport=5353, dport=5353) / Raw(b"q" * 10),
        Ether() / ARP(),
        Ether() / IP(src="10.1.1.1", dst="10.1.1.2") / ICMP() / Raw(b"ping"),
    ]
    for i, f in enumerate(frames):
        f.time = t + Decimal(i) * Decimal("0.001001")
    return frames


def main():
    frames, sessions, certs = build_ten_sessions()
    ten = os.path.join(HERE, "ten_sessions.pcap")
    wrpcap(ten, frames)

    expected_sessions = []
    for s in sorted(sessions, key=lambda s: s["conv"].packets[0][0]):
        c = s["conv"]
        e = {
            "name": s["name"],
            "client": [c.client, c.cport],
            "server": [c.server, c.sport],
            "start_us": int(c.packets[0][0] * 1000000),
            "packets": len(c.packets),
            "fwd_packets": sum(1 for p in c.packets if p[1] == "fwd"),
            "tls": s["tls"],
            "features": hand_features(c.packets),
        }
        if s["tls"]:
            e.update(sni=s["sni"], version=s["version"], cipher=s["cipher"], resumed=s["resumed"],
                     cert_fuids=[cert_expect(certs[k])["fuid"] for k in s["certs"]])
        expected_sessions.append(e)

    expected = {
        "capture": "ten_sessions.pcap",
        "sha256": hashlib.sha256(open(ten, "rb").read()).hexdigest(),
        "frames": len(frames),
        "sessions": expected_sessions,
        "certificates": {k: cert_expect(v) for k, v in certs.items()},
    }
    with open(os.path.join(HERE, "ten_sessions.expected.json"), "w") as f:
        json.dump(expected, f, indent=1)
    for name, cert in certs.items():
        with open(os.path.join(HERE, f"cert_{name}.der"), "wb") as f:
            f.write(der_of(cert))

    mixed = mixed_frames()
    wrpcap(os.path.join(HERE, "mixed_le_us.pcap"), mixed)
    wrpcap(os.path.join(HERE, "mixed_le_ns.pcap"), mixed, nano=True)
    with PcapNgWriter(os.path.join(HERE, "mixed.pcapng")) as w:
        for fr in mixed:
            w.write(fr)
    reread = rdpcap(os.path.join(HERE, "mixed_le_us.pcap"))
    with open(os.path.join(HERE, "mixed.expected.json"), "w") as f:
        json.dump([dissect(fr) for fr in reread], f, indent=1)


if __name__ == "__main__":
    main()
