"""
Script to print the effective rbm-phase configuration and check its structure.
"""
import sys

import yaml

from utils import check_config, get_setting, load_config

config_path = sys.argv[1] if len(sys.argv) > 1 else None
config = load_config(config_path)

print("=" * 60)
print("EFFECTIVE CONFIGURATION")
print("=" * 60)
print(yaml.dump(config, default_flow_style=False, sort_keys=True))

print("\n" + "=" * 60)
print("VERIFICATION")
print("=" * 60)
problems = check_config(config)
for problem in problems:
    print(f"✗ {problem}")

print(f"✓ Quadrature: {get_setting(config, 'quadrature.panels')} panels x "
      f"{get_setting(config, 'quadrature.points')} points")
print(f"✓ Root tolerance: {get_setting(config, 'roots.tol')}")
print(f"✓ Power iteration: eps={get_setting(config, 'power_iteration.eps')}, "
      f"max_iter={get_setting(config, 'power_iteration.max_iter')}")
print(f"✓ Stationary floors: sigma0_fraction={get_setting(config, 'stationary.sigma0_fraction')}, "
      f"near_critical_floor={get_setting(config, 'stationary.near_critical_floor')}")
print(f"✓ Log level: {get_setting(config, 'logging.level')}")

sys.exit(1 if problems else 0)
