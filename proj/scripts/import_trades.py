#!/usr/bin/env python3
"""Convert an exchange trade-history CSV to cdalab's trade-history lines.

Input: a CSV with a header. By default the columns are the ones in the old
Cryptsy market-trades dumps: label (market, e.g. DOGE/BTC), datetime,
tradeprice (BTC per coin), quantity (coins) and initiate_ordertype
(Buy/Sell, the taker side). Any of them can be renamed with flags.

Output: `timestamp_ms,coin,price,quantity,B|S` sorted by time, which
`cdalab experiment --backend replay --control-only` reads via the
`replay_trades` config key.

A lot is 10^-lot_decimals coins and prices are written in 1e-8 BTC per
lot. Trades that round to zero lots or a zero price are dropped and
counted on stderr.
"""

import argparse
import csv
import sys
from datetime import datetime, timedelta, timezone


def parse_time(text, fmt, offset_hours):
    text = text.strip()
    if text.isdigit():
        return int(text) * (1000 if len(text) <= 10 else 1)
    dt = datetime.strptime(text, fmt).replace(tzinfo=timezone(timedelta(hours=offset_hours)))
    return int(dt.timestamp() * 1000)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("input", nargs="+", help="CSV files to convert")
    ap.add_argument("-o", "--output", default="-", help="output file (default stdout)")
    ap.add_argument("--coin-column", default="label")
    ap.add_argument("--time-column", default="datetime")
    ap.add_argument("--price-column", default="tradeprice")
    ap.add_argument("--quantity-column", default="quantity")
    ap.add_argument("--side-column", default="initiate_ordertype")
    ap.add_argument("--time-format", default="%Y-%m-%d %H:%M:%S")
    ap.add_argument("--utc-offset-hours", type=float, default=0.0,
                    help="offset of the input clock from UTC (Cryptsy used US Eastern, -5 or -4)")
    ap.add_argument("--lot-decimals", type=int, default=0,
                    help="a lot is 10^-N coins (default 0, whole coins); raise it for coins traded in fractions")
    args = ap.parse_args(argv)

    lot = 10 ** args.lot_decimals
    rows, dropped = [], 0
    for path in args.input:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            for line_no, rec in enumerate(reader, start=2):
                try:
                    coin = rec[args.coin_column].strip().split("/")[0]
                    ts = parse_time(rec[args.time_column], args.time_format, args.utc_offset_hours)
                    price_btc = float(rec[args.price_column])
                    qty_coins = float(rec[args.quantity_column])
                    side = rec[args.side_column].strip().lower()
                except (KeyError, ValueError) as e:
                    sys.exit(f"{path}:{line_no}: {e}")
                if side not in ("buy", "sell", "b", "s"):
                    sys.exit(f"{path}:{line_no}: unknown side {rec[args.side_column]!r}")
                lots = round(qty_coins * lot)
                price = round(price_btc * 1e8 / lot)
                if lots <= 0 or price <= 0 or "," in coin:
                    dropped += 1
                    continue
                rows.append((ts, coin, price, lots, "B" if side.startswith("b") else "S"))

    rows.sort(key=lambda r: r[0])
    out = sys.stdout if args.output == "-" else open(args.output, "w")
    with out:
        for r in rows:
            out.write("%d,%s,%d,%d,%s\n" % r)
    print(f"wrote {len(rows)} trades, dropped {dropped}", file=sys.stderr)


if __name__ == "__main__":
    main()
