"""Send a mux to a multicast group on loopback and record it back."""

import threading

from tscast import gen_fixture, make_schedule, receive_stream, resync, send_stream, validate_endpoint

endpoint = validate_endpoint("239.10.10.10", 5004, "127.0.0.1")
packets = resync(gen_fixture(programs=2, duration_s=1)).packets
schedule = make_schedule(len(packets), pcr_source=packets, mode="pcr")

received = []
ready = threading.Event()
box = {}
listener = threading.Thread(target=lambda: box.setdefault("report", receive_stream(
    endpoint, lambda pkt, _t: received.append(pkt), count=len(packets), idle_timeout=2, ready=ready)))
listener.start()
ready.wait()

sent = send_stream(packets, schedule, endpoint)
listener.join()
report = box["report"]
print(f"sent {sent.datagrams} datagrams in {sent.duration_s:.3f} s, "
      f"max lateness {sent.max_lateness_s * 1e3:.2f} ms")
print(f"received {report.packets} packets at {report.bitrate_bps / 1e6:.3f} Mb/s, "
      f"{report.gaps} continuity errors")
print("byte-identical:", received == packets)
