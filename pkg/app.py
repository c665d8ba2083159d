"""
WSGI entry point for the toolkit API.
Used by gunicorn (see render.yaml): gunicorn app:app
"""

from main import app

if __name__ == "__main__":
    app.run()
