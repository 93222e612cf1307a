import configparser
import os


class ConfigManager:
    def __init__(self, config_path="config.ini"):
        self.config_path = config_path
        self.config = configparser.ConfigParser()
        self.load_config()

    def load_config(self):
        if not os.path.exists(self.config_path):
            self.create_default_config()
        self.config.read(self.config_path)

    def create_default_config(self):
        # Spectral radius and root finding
        self.config['Spectral'] = {
            'radius_tolerance': '1e-12',
            'root_tolerance': '1e-10',
            'max_power_iterations': '200000',
            'critical_tolerance': '1e-9',
            'subcritical_probe': '1e-9'
        }

        # Antichain enumeration
        self.config['Antichain'] = {
            'capacity_cap': '100000000',
            'materialize_cap': '4000000',
            'tie_guard': '1e-9'
        }

        # Codebooks, integration and Lloyd
        self.config['Quantization'] = {
            'depth_offset': '6',
            'lloyd_max_iter': '200',
            'lloyd_tolerance': '1e-9',
            'monte_carlo_samples': '1000000',
            'seed': '12345'
        }

        # Verification suite ranges and bands
        self.config['Verify'] = {
            'k_min': '6',
            'k_max': '16',
            'quantize_k_min': '4',
            'quantize_k_max': '9',
            'band_limit': '3.0',
            'growth_band_limit': '2.0',
            'depth_ratio_limit': '3.0',
            'transient_n_min': '10',
            'transient_n_max': '60',
            'row_sum_h_max': '64'
        }

        self.config['Logging'] = {
            'level': 'WARNING',
            'log_file': 'quantization_log.txt'
        }

        with open(self.config_path, 'w') as f:
            self.config.write(f)

    def get_spectral_config(self):
        return {
            'radius_tolerance': self.config.getfloat('Spectral', 'radius_tolerance', fallback=1e-12),
            'root_tolerance': self.config.getfloat('Spectral', 'root_tolerance', fallback=1e-10),
            'max_power_iterations': self.config.getint('Spectral', 'max_power_iterations', fallback=200000),
            'critical_tolerance': self.config.getfloat('Spectral', 'critical_tolerance', fallback=1e-9),
            'subcritical_probe': self.config.getfloat('Spectral', 'subcritical_probe', fallback=1e-9)
        }

    def get_antichain_config(self):
        return {
            'capacity_cap': self.config.getint('Antichain', 'capacity_cap', fallback=10 ** 8),
            'materialize_cap': self.config.getint('Antichain', 'materialize_cap', fallback=4 * 10 ** 6),
            'tie_guard': self.config.getfloat('Antichain', 'tie_guard', fallback=1e-9)
        }

    def get_quantization_config(self):
        return {
            'depth_offset': self.config.getint('Quantization', 'depth_offset', fallback=6),
            'lloyd_max_iter': self.config.getint('Quantization', 'lloyd_max_iter', fallback=200),
            'lloyd_tolerance': self.config.getfloat('Quantization', 'lloyd_tolerance', fallback=1e-9),
            'monte_carlo_samples': self.config.getint('Quantization', 'monte_carlo_samples', fallback=10 ** 6),
            'seed': self.config.getint('Quantization', 'seed', fallback=12345)
        }

    def get_verify_config(self):
        """Returns the verification ranges and acceptance bands"""
        return {
            'k_range': (
                self.config.getint('Verify', 'k_min', fallback=6),
                self.config.getint('Verify', 'k_max', fallback=16)
            ),
            'quantize_k_range': (
                self.config.getint('Verify', 'quantize_k_min', fallback=4),
                self.config.getint('Verify', 'quantize_k_max', fallback=9)
            ),
            'bands': {
                'band_limit': self.config.getfloat('Verify', 'band_limit', fallback=3.0),
                'growth_band_limit': self.config.getfloat('Verify', 'growth_band_limit', fallback=2.0),
                'depth_ratio_limit': self.config.getfloat('Verify', 'depth_ratio_limit', fallback=3.0)
            },
            'transient_range': (
                self.config.getint('Verify', 'transient_n_min', fallback=10),
                self.config.getint('Verify', 'transient_n_max', fallback=60)
            ),
            'row_sum_h_max': self.config.getint('Verify', 'row_sum_h_max', fallback=64)
        }

    def get_logging_config(self):
        """Level is a level name or a numeric level; both may carry an inline comment"""
        level = self._strip_comment(self.config.get('Logging', 'level', fallback='WARNING'))
        return {
            'level': int(level) if level.isdigit() else level.upper(),
            'log_file': self._strip_comment(self.config.get('Logging', 'log_file', fallback='quantization_log.txt'))
        }

    def _strip_comment(self, value):
        for comment_marker in [';', '#', '//']:
            if comment_marker in value:
                value = value.split(comment_marker)[0]
        return value.strip()
