from biomatch.config.config_loader import get_path_config

# Load path configuration from YAML
path_config = get_path_config()

PARAMS_FILE = path_config.get("params_file", "params.json")
GALLERY_FILE = path_config.get("gallery_file", "gallery.bmdb")
TRANSCRIPT_FILE = path_config.get("transcript_file", "transcript.log")
