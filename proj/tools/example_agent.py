#!/usr/bin/env python3
"""Minimal remote agent: length-prefixed JSON frames on stdin/stdout.

Flies forward a fixed number of times, then claims.
"""
import json
import struct
import sys

ACT_ON = {"Observation", "ActionRejected", "Error"}


def read_frame(stream):
    head = stream.read(4)
    if len(head) < 4:
        return None
    (n,) = struct.unpack(">I", head)
    return json.loads(stream.read(n))


def write_frame(stream, msg):
    body = json.dumps(msg).encode()
    stream.write(struct.pack(">I", len(body)) + body)
    stream.flush()


def main():
    moves = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    inp, out = sys.stdin.buffer, sys.stdout.buffer
    while True:
        msg = read_frame(inp)
        if msg is None or msg["type"] == "EpisodeEnd":
            return
        if msg["type"] not in ACT_ON:
            continue
        if moves > 0:
            moves -= 1
            write_frame(out, {"type": "Key", "key": "forward"})
        else:
            write_frame(out, {"type": "Claim"})


if __name__ == "__main__":
    main()
