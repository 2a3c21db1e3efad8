#!/usr/bin/env python
import sys
import os
import argparse
import time

# Add the parent directory to sys.path to allow importing app modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.config import load_settings
from app.schemas.loss import LossKind
from app.utils.loss import clear_target_cache, evaluate_loss
from app.utils.scattering import jtfs_coefficient_count

def main():
    # Parse command line arguments
    parser = argparse.ArgumentParser(description="Time loss and gradient evaluations at the configured settings")
    parser.add_argument('--config', type=str, default=None, help='Experiment file with KEY=value lines')
    parser.add_argument('--loss', choices=[k.value for k in LossKind], default='jtfs', help='Loss to time')
    parser.add_argument('--repeats', type=int, default=3, help='Number of timed evaluations')
    parser.add_argument('--max-seconds', type=float, default=10.0, help='Fail when the best warm evaluation takes longer')
    args = parser.parse_args()

    settings = load_settings(args.config)
    cfg = settings.pipeline_config()
    target = settings.target()
    init = settings.init()

    try:
        count = jtfs_coefficient_count(cfg.scattering, cfg.synth.num_samples, cfg.synth.sample_rate)
        print(f"{cfg.synth.num_samples} samples at {cfg.synth.sample_rate} Hz, {count} JTFS coefficients")

        # First call also renders and caches the target
        start = time.perf_counter()
        evaluate_loss(args.loss, target, init, 0, settings.TAU, cfg)
        print(f"Cold evaluation: {time.perf_counter() - start:.2f} s")

        timings = []
        for _ in range(args.repeats):
            start = time.perf_counter()
            value = evaluate_loss(args.loss, target, init, 0, settings.TAU, cfg)
            timings.append(time.perf_counter() - start)
        print(f"Warm evaluation: {min(timings):.2f} s best of {args.repeats} (loss {value.value:.6g})")
        if min(timings) > args.max_seconds:
            print(f"Slower than the {args.max_seconds:.1f} s budget")
            sys.exit(1)
    except Exception as e:
        print(f"Error during benchmark: {str(e)}")
        sys.exit(1)
    finally:
        clear_target_cache()

if __name__ == "__main__":
    main()
