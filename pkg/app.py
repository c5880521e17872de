from flask import Flask

from config import Config


def create_app(config_object=Config):
    app = Flask(__name__)
    app.config.from_object(config_object)
    app.json.sort_keys = app.config["JSON_SORT_KEYS"]

    from cli import lcfrs

    app.cli.add_command(lcfrs)

    from blueprints.analysis import bp as analysis_bp

    app.register_blueprint(analysis_bp)

    return app


app = create_app()


if __name__ == "__main__":
    app.run(debug=True)
